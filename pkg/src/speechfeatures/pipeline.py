"""The three-step extraction pipeline: utterances, configuration, extraction.

A PipelineConfig bundles one spectro-temporal feature type with optional
pitch, delta, CMVN and warp-normalization stages. Configurations serialize
to an editable, indentation-nested key-value text format and back without
loss. Extraction runs over an utterance manifest with any number of worker
processes and returns bit-identical results regardless of the worker count:
every randomized stage draws from a generator seeded by the global seed and
the utterance name.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
from dataclasses import dataclass, asdict

from .audio import Utterances, load_wav, resample, segment
from .features import FeaturesCollection, concatenate
from .pitch import PitchOptions, PostPitchOptions, estimate_pitch, postprocess_pitch
from .postproc import CmvnOptions, DeltaOptions, cmvn_apply, delta
from .speaker import UbmOptions, VtlnOptions, estimate_warps
from .spectral import (FilterbankOptions, MfccOptions, PlpOptions,
                       SpectrogramOptions, filterbank, mfcc, plp, spectrogram)

__all__ = ["PipelineConfig", "ExtractionError", "default_config",
           "extract_features", "config_to_dict", "config_from_dict",
           "config_to_text", "write_config", "read_config"]

FEATURE_OPTIONS = {
    "spectrogram": SpectrogramOptions,
    "filterbank": FilterbankOptions,
    "mfcc": MfccOptions,
    "plp": PlpOptions,
}


class ExtractionError(RuntimeError):
    """Raised when utterances fail to process; carries per-utterance detail."""

    def __init__(self, failures):
        self.failures = dict(failures)
        lines = [f"{name}: {message}" for name, message in self.failures.items()]
        super().__init__("extraction failed for {} utterance(s):\n  {}".format(
            len(lines), "\n  ".join(lines)))


@dataclass(frozen=True)
class PipelineConfig:
    """A full extraction recipe: feature options plus optional stages."""
    features: str
    options: object
    pitch: PitchOptions | None = None
    pitch_post: PostPitchOptions | None = None
    delta: DeltaOptions | None = None
    cmvn: CmvnOptions | None = None
    vtln: VtlnOptions | None = None
    seed: int = 0

    def __post_init__(self):
        if self.features not in FEATURE_OPTIONS:
            raise ValueError(
                f"unknown features {self.features!r}, expected one of "
                f"{', '.join(FEATURE_OPTIONS)}")
        expected = FEATURE_OPTIONS[self.features]
        if type(self.options) is not expected:
            raise ValueError(
                f"{self.features} features need {expected.__name__} options")
        if (self.pitch is None) != (self.pitch_post is None):
            raise ValueError("pitch and pitch post-processing go together")
        if self.vtln is not None and self.features == "spectrogram":
            raise ValueError("warp normalization is not available for spectrogram")


def default_config(features, with_pitch=False, with_delta=False,
                   with_cmvn=False, with_vtln=False, seed=0):
    """A PipelineConfig with default parameters for the requested stages."""
    if features not in FEATURE_OPTIONS:
        raise ValueError(
            f"unknown features {features!r}, expected one of "
            f"{', '.join(FEATURE_OPTIONS)}")
    options = FEATURE_OPTIONS[features]()
    return PipelineConfig(
        features=features,
        options=options,
        pitch=PitchOptions(sample_rate=options.sample_rate) if with_pitch else None,
        pitch_post=PostPitchOptions() if with_pitch else None,
        delta=DeltaOptions() if with_delta else None,
        cmvn=CmvnOptions(by="speaker") if with_cmvn else None,
        vtln=VtlnOptions() if with_vtln else None,
        seed=seed)


def config_to_dict(config):
    """The configuration as a plain nested dict (JSON-compatible)."""
    out = {"features": config.features, "seed": config.seed,
           config.features: asdict(config.options)}
    if config.pitch is not None:
        out["pitch"] = asdict(config.pitch)
        out["pitch_postprocessing"] = asdict(config.pitch_post)
    if config.delta is not None:
        out["delta"] = asdict(config.delta)
    if config.cmvn is not None:
        out["cmvn"] = asdict(config.cmvn)
    if config.vtln is not None:
        vtln = asdict(config.vtln)
        ubm = vtln.pop("ubm")
        vtln["ubm"] = ubm
        out["vtln"] = vtln
    return out


def config_from_dict(tree):
    """Inverse of config_to_dict."""
    tree = dict(tree)
    features = tree.get("features")
    if features not in FEATURE_OPTIONS:
        raise ValueError(f"config has no valid features entry: {features!r}")
    if features not in tree:
        raise ValueError(f"config is missing the {features!r} parameter block")
    kwargs = {
        "features": features,
        "options": FEATURE_OPTIONS[features](**tree[features]),
        "seed": int(tree.get("seed", 0)),
    }
    if "pitch" in tree:
        kwargs["pitch"] = PitchOptions(**tree["pitch"])
        kwargs["pitch_post"] = PostPitchOptions(
            **tree.get("pitch_postprocessing", {}))
    if "delta" in tree:
        kwargs["delta"] = DeltaOptions(**tree["delta"])
    if "cmvn" in tree:
        kwargs["cmvn"] = CmvnOptions(**tree["cmvn"])
    if "vtln" in tree:
        vtln = dict(tree["vtln"])
        ubm = UbmOptions(**vtln.pop("ubm", {}))
        kwargs["vtln"] = VtlnOptions(ubm=ubm, **vtln)
    return PipelineConfig(**kwargs)


def _format_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_scalar(text):
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _render_tree(tree, indent=0):
    lines = []
    pad = "  " * indent
    for key, value in tree.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_render_tree(value, indent + 1))
        else:
            lines.append(f"{pad}{key}: {_format_scalar(value)}")
    return lines


def _parse_tree(text):
    root = {}
    stack = [(-1, root)]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        if indent % 2:
            raise ValueError(f"line {lineno}: odd indentation")
        level = indent // 2
        key, sep, value = raw.strip().partition(":")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key: value' or 'key:'")
        while stack and stack[-1][0] >= level:
            stack.pop()
        if not stack:
            raise ValueError(f"line {lineno}: indentation does not match")
        _, parent = stack[-1]
        value = value.strip()
        if value:
            parent[key.strip()] = _parse_scalar(value)
        else:
            child = {}
            parent[key.strip()] = child
            stack.append((level, child))
    return root


def config_to_text(config):
    """The configuration as editable nested key-value text."""
    return "\n".join(_render_tree(config_to_dict(config))) + "\n"


def write_config(config, path):
    """Write a configuration as editable nested key-value text."""
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(config_to_text(config))


def read_config(path):
    """Parse a configuration written by write_config (or hand-edited)."""
    with open(path, "r", encoding="utf-8") as fp:
        return config_from_dict(_parse_tree(fp.read()))


def derive_seed(seed, label):
    """A stable per-label seed, independent of process or schedule."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _load_utterance_audio(utt, sample_rate):
    audio = load_wav(utt.audio_path)
    if utt.onset is not None:
        audio = segment(audio, utt.onset, utt.offset)
    if audio.sample_rate != sample_rate:
        audio = resample(audio, sample_rate)
    return audio


class _WarpedMfcc:
    """(utterance, warp) -> Features extractor backing warp estimation."""

    def __init__(self, sample_rate, seed):
        self.opts = MfccOptions(sample_rate=sample_rate)
        self.seed = seed
        self._audio = {}

    def __call__(self, utt, warp):
        if utt.name not in self._audio:
            self._audio[utt.name] = _load_utterance_audio(utt, self.opts.sample_rate)
        return mfcc(self._audio[utt.name], self.opts, vtln_warp=warp,
                    seed=derive_seed(self.seed, utt.name))


def _extract_one(config, utt, warp):
    """Extract the configured features of one utterance."""
    audio = _load_utterance_audio(utt, config.options.sample_rate)
    seed = derive_seed(config.seed, utt.name)

    if config.features == "spectrogram":
        feats = spectrogram(audio, config.options, seed=seed)
    else:
        func = {"filterbank": filterbank, "mfcc": mfcc, "plp": plp}[config.features]
        feats = func(audio, config.options, vtln_warp=warp, seed=seed)

    if config.delta is not None:
        feats = delta(feats, config.delta)
    if config.pitch is not None:
        raw = estimate_pitch(audio, config.pitch)
        post = postprocess_pitch(raw, config.pitch_post,
                                 seed=derive_seed(config.seed, utt.name + "::pitch"))
        feats = concatenate(feats, post)

    properties = dict(feats.properties)
    properties["pipeline"] = config_to_dict(config)
    properties["audio"] = utt.audio_path
    if warp != 1.0:
        properties["vtln_warp"] = warp
    return feats.with_properties(properties)


def _extract_task(args):
    config, utt, warp = args
    try:
        return utt.name, _extract_one(config, utt, warp), None
    except Exception as err:  # reported per utterance by extract_features
        return utt.name, None, f"{type(err).__name__}: {err}"


def extract_features(config, utterances, njobs=1):
    """Run the configured pipeline over an utterance manifest.

    Per utterance: load, segment, resample, compute the configured features
    (at the speaker's warp factor when warp normalization is enabled),
    append derivatives, concatenate pitch channels, then normalize over the
    configured scope. Results are keyed by utterance name and identical for
    any njobs. Raises ExtractionError with per-utterance diagnostics if any
    utterance fails.
    """
    if njobs < 1:
        raise ValueError(f"njobs must be >= 1, got {njobs}")
    if not isinstance(utterances, Utterances):
        utterances = Utterances(utterances)
    needs_speakers = (config.vtln is not None
                      or (config.cmvn is not None and config.cmvn.by == "speaker"))
    if needs_speakers and not utterances.has_speakers:
        raise ValueError(
            "this configuration requires speaker information in the manifest")

    warps = {name: 1.0 for name in (u.name for u in utterances)}
    if config.vtln is not None:
        extractor = _WarpedMfcc(config.options.sample_rate,
                                derive_seed(config.seed, "::vtln-features"))
        speaker_warps = estimate_warps(
            utterances, extractor, config.vtln,
            seed=derive_seed(config.seed, "::vtln-ubm"))
        warps = {u.name: speaker_warps[u.speaker] for u in utterances}

    tasks = [(config, utt, warps[utt.name]) for utt in utterances]
    if njobs == 1:
        outcomes = [_extract_task(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=njobs) as pool:
            outcomes = list(pool.map(_extract_task, tasks))

    failures = {name: message for name, _, message in outcomes if message}
    if failures:
        raise ExtractionError(failures)

    collection = FeaturesCollection({name: feats for name, feats, _ in outcomes})
    if config.cmvn is not None:
        collection = cmvn_apply(collection, utterances.speakers, config.cmvn)
    return collection
