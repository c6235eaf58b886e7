"""ROVER-style fusion of ASR teacher transcripts.

The package aligns multiple recognizers' outputs into word transition
networks, fuses them by majority voting, and wraps the surrounding
pseudo-labeling workflow: grid decoding, stream segmentation, WER
scoring, and a synthetic ensemble-gain experiment.
"""

from .decoders import (
    BeamResult,
    JointGrid,
    PosteriorGrid,
    ctc_collapse,
    ctc_greedy,
    ctc_prefix_beam,
    load_joint_grid,
    load_posterior_grid,
    rnnt_greedy,
    save_joint_grid,
    save_posterior_grid,
)
from .errors import DataError, DuplicateRecordError, FormatError
from .evaluation import (
    GapReport,
    WerReport,
    corpus_wer,
    duration_buckets,
    edit_alignment,
    gap_report,
    relative_change,
)
from .pipeline import (
    PipelineConfig,
    PseudoLabelRecord,
    TeacherSource,
    load_config,
    read_manifest,
    replay_record,
    run_distill,
    run_report,
    write_manifest,
)
from .segmenter import SegmentParams, SegmentRecord, segment_manifest, segment_stream
from .simulate import (
    SynthCorpus,
    TeacherProfile,
    corrupt,
    ensemble_gain_experiment,
    gen_corpus,
)
from .transcripts import (
    DEFAULT_POLICY,
    Hypothesis,
    NormalizationPolicy,
    Word,
    load_hypotheses,
    normalize_hypothesis,
    normalize_transcript,
    parse_hypotheses,
    save_hypotheses,
    serialize_hypotheses,
)
from .voting import VoteParams, VoteTrace, build_network, combine, vote
from .wtn import (
    CorrespondenceSet,
    WordArc,
    WordTransitionNetwork,
    align_hypothesis,
    alignment_cost,
    wtn_dump,
    wtn_from_hypothesis,
)

__version__ = "0.1.0"

__all__ = [
    "BeamResult",
    "CorrespondenceSet",
    "DEFAULT_POLICY",
    "DataError",
    "DuplicateRecordError",
    "FormatError",
    "GapReport",
    "Hypothesis",
    "JointGrid",
    "NormalizationPolicy",
    "PipelineConfig",
    "PosteriorGrid",
    "PseudoLabelRecord",
    "SegmentParams",
    "SegmentRecord",
    "SynthCorpus",
    "TeacherProfile",
    "TeacherSource",
    "VoteParams",
    "VoteTrace",
    "WerReport",
    "Word",
    "WordArc",
    "WordTransitionNetwork",
    "align_hypothesis",
    "alignment_cost",
    "build_network",
    "combine",
    "corpus_wer",
    "corrupt",
    "ctc_collapse",
    "ctc_greedy",
    "ctc_prefix_beam",
    "duration_buckets",
    "edit_alignment",
    "ensemble_gain_experiment",
    "gap_report",
    "gen_corpus",
    "load_config",
    "load_hypotheses",
    "load_joint_grid",
    "load_posterior_grid",
    "normalize_hypothesis",
    "normalize_transcript",
    "parse_hypotheses",
    "read_manifest",
    "relative_change",
    "replay_record",
    "rnnt_greedy",
    "run_distill",
    "run_report",
    "save_hypotheses",
    "save_joint_grid",
    "save_posterior_grid",
    "segment_manifest",
    "segment_stream",
    "serialize_hypotheses",
    "vote",
    "write_manifest",
    "wtn_dump",
    "wtn_from_hypothesis",
]
