"""Diagonal-covariance GMM training and per-speaker warp factor estimation.

A universal background model (UBM) is fitted by expectation-maximization,
starting from a few components at the global mean and splitting the heaviest
component until the requested size is reached. Warp factors are then chosen
per speaker by scoring features extracted over a grid of warps against the
UBM and keeping the most likely warp, retraining the UBM on the warped
features between rounds. Training is unsupervised throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import Features, FeaturesCollection

__all__ = ["DiagGmm", "UbmOptions", "VtlnOptions", "gmm_loglike",
           "train_ubm", "estimate_warps", "warp_grid", "select_warp",
           "save_warps", "load_warps", "save_gmm", "load_gmm"]

NORM_TYPES = ("offset", "none", "diag")

# per-dimension variance floor, as a fraction of the global variance
VAR_FLOOR_FRACTION = 1e-3
ABSOLUTE_VAR_FLOOR = 1e-10


@dataclass(frozen=True)
class UbmOptions:
    """Background model size and training schedule."""
    num_gauss: int = 64
    num_iters: int = 4
    initial_gauss_proportion: float = 0.5
    num_iters_init: int = 20
    num_frames: int = 500000
    min_gaussian_weight: float = 1e-4
    remove_low_count_gaussians: bool = False

    def __post_init__(self):
        if self.num_gauss < 1:
            raise ValueError(f"num_gauss must be >= 1, got {self.num_gauss}")
        if not 0 < self.initial_gauss_proportion <= 1:
            raise ValueError("initial_gauss_proportion must be in (0, 1]")
        if self.num_iters < 0 or self.num_iters_init < 1:
            raise ValueError("iteration counts must be positive")
        if self.num_frames < 1:
            raise ValueError(f"num_frames must be >= 1, got {self.num_frames}")


@dataclass(frozen=True)
class VtlnOptions:
    """Warp search grid and normalization applied during scoring."""
    ubm: UbmOptions = field(default_factory=UbmOptions)
    num_iters: int = 15
    min_warp: float = 0.85
    max_warp: float = 1.15
    warp_step: float = 0.01
    logdet_scale: float = 0.0
    norm_type: str = "offset"

    def __post_init__(self):
        if not self.min_warp < 1.0 < self.max_warp:
            raise ValueError(
                f"need min_warp < 1 < max_warp, got {self.min_warp} "
                f"and {self.max_warp}")
        if self.warp_step <= 0:
            raise ValueError(f"warp_step must be > 0, got {self.warp_step}")
        if self.norm_type not in NORM_TYPES:
            raise ValueError(
                f"unknown norm_type {self.norm_type!r}, expected one of "
                f"{', '.join(NORM_TYPES)}")
        if self.num_iters < 1:
            raise ValueError(f"num_iters must be >= 1, got {self.num_iters}")


class DiagGmm:
    """A Gaussian mixture with diagonal covariances."""

    def __init__(self, weights, means, variances):
        weights = np.asarray(weights, dtype=np.float64)
        means = np.asarray(means, dtype=np.float64)
        variances = np.asarray(variances, dtype=np.float64)
        if means.ndim != 2 or variances.shape != means.shape:
            raise ValueError("means and variances must be [num_gauss, dim]")
        if weights.shape != (means.shape[0],):
            raise ValueError("weights must be a vector of num_gauss entries")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be non-negative and sum to 1")
        if np.any(variances <= 0):
            raise ValueError("variances must be positive")
        self.weights = weights
        self.means = means
        self.variances = variances
        # per-iteration log-likelihood segments recorded by train_ubm;
        # each segment is monotone non-decreasing (EM guarantee)
        self.history = []

    @property
    def num_gauss(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def component_loglikes(self, frames):
        """Per-frame, per-component log of weight times Gaussian density."""
        frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
        if frames.shape[1] != self.dim:
            raise ValueError(
                f"frames have dimension {frames.shape[1]}, model has {self.dim}")
        inv_var = 1.0 / self.variances
        const = (np.log(self.weights)
                 - 0.5 * (np.log(2.0 * np.pi * self.variances).sum(axis=1)
                          + (self.means ** 2 * inv_var).sum(axis=1)))
        quad = (frames ** 2) @ (0.5 * inv_var).T - frames @ (self.means * inv_var).T
        return const[None, :] - quad

    def loglikes(self, frames):
        """Per-frame mixture log-likelihood via log-sum-exp."""
        comp = self.component_loglikes(frames)
        top = comp.max(axis=1, keepdims=True)
        return top[:, 0] + np.log(np.exp(comp - top).sum(axis=1))


def gmm_loglike(gmm, frame):
    """Mixture log-likelihood of a single frame."""
    return float(gmm.loglikes(np.atleast_2d(frame))[0])


def _em_step(gmm, data, min_weight, var_floor):
    """One EM update; returns (new model, total log-likelihood before)."""
    comp = gmm.component_loglikes(data)
    top = comp.max(axis=1, keepdims=True)
    shifted = np.exp(comp - top)
    norm = shifted.sum(axis=1, keepdims=True)
    total_ll = float((top[:, 0] + np.log(norm[:, 0])).sum())
    resp = shifted / norm

    counts = resp.sum(axis=0)
    weights = counts / counts.sum()
    active = weights >= min_weight

    new_means = gmm.means.copy()
    new_vars = gmm.variances.copy()
    safe = np.maximum(counts, 1e-300)
    means = (resp.T @ data) / safe[:, None]
    second = (resp.T @ (data ** 2)) / safe[:, None]
    new_means[active] = means[active]
    new_vars[active] = np.maximum(second[active] - means[active] ** 2,
                                  var_floor[None, :])

    new_weights = np.where(active, weights, gmm.weights)
    new_weights = new_weights / new_weights.sum()
    return DiagGmm(new_weights, new_means, new_vars), total_ll


def _split_largest(gmm):
    """Split the heaviest component, perturbing the mean by +-0.5 sigma.

    Smaller perturbations leave the two halves in a symmetric saddle that
    EM escapes too slowly to separate well-spread clusters within the
    default iteration budget.
    """
    g = int(np.argmax(gmm.weights))
    offset = 0.5 * np.sqrt(gmm.variances[g])
    weights = np.concatenate([gmm.weights, [gmm.weights[g] / 2.0]])
    weights[g] /= 2.0
    means = np.vstack([gmm.means, gmm.means[g] - offset])
    means[g] = gmm.means[g] + offset
    variances = np.vstack([gmm.variances, gmm.variances[g]])
    return DiagGmm(weights, means, variances)


def _as_matrix(source):
    if isinstance(source, (FeaturesCollection, dict)):
        return np.vstack([f.data for f in source.values()])
    if isinstance(source, Features):
        return source.data
    return np.atleast_2d(np.asarray(source, dtype=np.float64))


def train_ubm(source, opts=None, seed=0):
    """Fit a diagonal GMM to a FeaturesCollection (or raw frame matrix).

    Initialization starts from round(initial_gauss_proportion * num_gauss)
    components at the global mean with seeded perturbations and the global
    diagonal variance, runs num_iters_init EM iterations over at most
    num_frames subsampled frames while splitting the heaviest component at
    evenly spaced points until num_gauss is reached, then runs num_iters
    full EM passes over all frames. Components whose weight falls under
    min_gaussian_weight are not updated, and are removed at the end iff
    remove_low_count_gaussians.

    The returned model carries a `history` list of log-likelihood segments,
    each one non-decreasing (segments are broken where splits change the
    model structure).
    """
    opts = opts or UbmOptions()
    data = _as_matrix(source)
    n, dim = data.shape
    if n < opts.num_gauss:
        raise ValueError(
            f"cannot fit {opts.num_gauss} components on {n} frames")

    global_mean = data.mean(axis=0)
    global_var = data.var(axis=0)
    if np.all(global_var <= 0):
        raise ValueError("degenerate training data: all frames are identical")
    var_floor = np.maximum(VAR_FLOOR_FRACTION * global_var, ABSOLUTE_VAR_FLOOR)

    rng = np.random.default_rng(seed)
    if n > opts.num_frames:
        init_data = data[rng.choice(n, opts.num_frames, replace=False)]
    else:
        init_data = data

    g0 = min(opts.num_gauss, max(1, round(opts.initial_gauss_proportion
                                          * opts.num_gauss)))
    means = global_mean[None, :] + (0.1 * np.sqrt(np.maximum(global_var, 0))
                                    * rng.standard_normal((g0, dim)))
    variances = np.tile(np.maximum(global_var, var_floor), (g0, 1))
    gmm = DiagGmm(np.full(g0, 1.0 / g0), means, variances)

    history = []
    segment = []
    for i in range(opts.num_iters_init):
        gmm, ll = _em_step(gmm, init_data, opts.min_gaussian_weight, var_floor)
        segment.append(ll)
        # evenly spaced splits, rounding up so they finish with EM to spare
        target = g0 + int(np.ceil(
            (i + 1) * (opts.num_gauss - g0) / opts.num_iters_init))
        if gmm.num_gauss < target:
            segment.append(float(gmm.loglikes(init_data).sum()))
            history.append(segment)
            segment = []
            while gmm.num_gauss < target:
                gmm = _split_largest(gmm)
    if segment:
        segment.append(float(gmm.loglikes(init_data).sum()))
        history.append(segment)

    segment = []
    for _ in range(opts.num_iters):
        gmm, ll = _em_step(gmm, data, opts.min_gaussian_weight, var_floor)
        segment.append(ll)
    if segment:
        segment.append(float(gmm.loglikes(data).sum()))
        history.append(segment)

    if opts.remove_low_count_gaussians:
        keep = gmm.weights >= opts.min_gaussian_weight
        if not np.all(keep):
            gmm = DiagGmm(gmm.weights[keep] / gmm.weights[keep].sum(),
                          gmm.means[keep], gmm.variances[keep])
    gmm.history = history
    return gmm


def warp_grid(opts):
    """The warp factors searched, min_warp to max_warp in warp_step steps."""
    count = int(round((opts.max_warp - opts.min_warp) / opts.warp_step)) + 1
    return opts.min_warp + np.arange(count) * opts.warp_step


def select_warp(grid, scores):
    """The grid warp with the best score.

    Ties prefer the warp closest to 1.0, then the smaller warp; adding a
    constant to every score cannot change the selection.
    """
    best_key, best_warp = None, None
    for warp, score in zip(grid, scores):
        key = (score, -abs(warp - 1.0), -warp)
        if best_key is None or key > best_key:
            best_key, best_warp = key, float(warp)
    return best_warp


def estimate_warps(utterances, extractor, opts=None, seed=0):
    """Estimate one frequency warp factor per speaker, unsupervised.

    `extractor` is a callable (utterance, warp) -> Features producing the
    features used for model training and scoring; it is invoked once per
    (utterance, warp) pair and cached. Each round scores every speaker's
    frames at every warp of the grid against a UBM trained on the currently
    selected warps (starting from 1.0 for everyone) and keeps the most
    likely warp; rounds stop early once the warp assignment is stable.
    Ties prefer the warp closest to 1.0, then the smaller warp.

    With norm_type "offset" the speaker's feature mean is replaced by the
    corpus mean before scoring; "diag" also rescales per-channel standard
    deviations and adds logdet_scale times the log sigma-ratio per frame;
    "none" scores raw features.
    """
    opts = opts or VtlnOptions()
    if not utterances.has_speakers:
        raise ValueError("warp estimation requires speakered utterances")
    grid = warp_grid(opts)
    # name-sorted grouping keeps every reduction bit-identical no matter
    # how the manifest is ordered
    by_speaker = {
        speaker: sorted(utts, key=lambda u: u.name)
        for speaker, utts in sorted(utterances.by_speaker().items())}

    cache = {}

    def features(utt, warp):
        key = (utt.name, float(warp))
        if key not in cache:
            cache[key] = extractor(utt, float(warp))
        return cache[key]

    def speaker_frames(speaker, warp):
        return np.vstack([features(u, warp).data for u in by_speaker[speaker]])

    warps = {speaker: 1.0 for speaker in by_speaker}
    for _ in range(opts.num_iters):
        train_data = np.vstack([
            speaker_frames(speaker, warps[speaker]) for speaker in by_speaker])
        gmm = train_ubm(train_data, opts.ubm, seed=seed)
        corpus_mean = train_data.mean(axis=0)
        corpus_std = np.maximum(train_data.std(axis=0), 1e-10)

        new_warps = {}
        for speaker in by_speaker:
            scores = [
                _warp_score(gmm, speaker_frames(speaker, warp),
                            corpus_mean, corpus_std, opts)
                for warp in grid]
            new_warps[speaker] = select_warp(grid, scores)
        if new_warps == warps:
            break
        warps = new_warps
    return warps


def _warp_score(gmm, frames, corpus_mean, corpus_std, opts):
    if opts.norm_type == "none":
        return float(gmm.loglikes(frames).sum())
    mean = frames.mean(axis=0)
    if opts.norm_type == "offset":
        return float(gmm.loglikes(frames - mean + corpus_mean).sum())
    std = np.maximum(frames.std(axis=0), 1e-10)
    ratio = corpus_std / std
    normalized = (frames - mean) * ratio + corpus_mean
    score = float(gmm.loglikes(normalized).sum())
    score += opts.logdet_scale * frames.shape[0] * float(np.log(ratio).sum())
    return score


def save_warps(warps, path):
    """Write a speaker -> warp map as two-column text."""
    with open(path, "w", encoding="utf-8") as fp:
        for speaker in sorted(warps):
            fp.write(f"{speaker} {warps[speaker]!r}\n")


def load_warps(path):
    """Read a speaker -> warp map written by save_warps."""
    warps = {}
    with open(path, "r", encoding="utf-8") as fp:
        for line in fp:
            if not line.strip():
                continue
            speaker, value = line.split()
            warps[speaker] = float(value)
    return warps


def save_gmm(gmm, path):
    """Store a DiagGmm in the binary features container.

    The model becomes three named matrices (weights, means, variances) with
    the component index as the time column.
    """
    index = np.arange(gmm.num_gauss, dtype=np.float64)
    props = {"num_gauss": gmm.num_gauss, "dim": gmm.dim}
    coll = FeaturesCollection({
        "weights": Features(gmm.weights[:, None], index, props),
        "means": Features(gmm.means, index, props),
        "variances": Features(gmm.variances, index, props),
    })
    coll.save(path, format="binary")


def load_gmm(path):
    """Load a DiagGmm stored by save_gmm."""
    coll = FeaturesCollection.load(path, format="binary")
    try:
        return DiagGmm(coll["weights"].data[:, 0], coll["means"].data,
                       coll["variances"].data)
    except KeyError as err:
        raise ValueError(f"{path}: not a stored GMM, missing {err}") from err
