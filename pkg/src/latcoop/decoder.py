"""Tree-search lattice decoding.

``fano_decode`` runs the classic threshold automaton of the Fano sequential
decoder over an MMSE-DFE-preprocessed system, searching the relaxed integer
space Z^m (or, in clamp mode, the boxed information set).  Siblings at each
level are explored in Schnorr-Euchner zig-zag order around the unconstrained
per-level estimate, which makes the branch metric nondecreasing within a
level; a branch-and-bound cutoff against the best full-depth leaf guarantees
termination of the relaxed search.  ``ml_decode`` provides the brute-force
maximum-likelihood oracle for enumerable codebooks.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .lattice_codec import LatticeCode, enumerate_codebook
from .mathkit import PreprocessedSystem

STATUS_CONVERGED = 0
STATUS_EXHAUSTED = 1

BOUNDARY_RELAXED = "relaxed"
BOUNDARY_CLAMP = "clamp"


@dataclass(frozen=True)
class DecoderConfig:
    """Fano search knobs: bias per level, threshold step, node budget.

    ``refine_factor`` bounds the branch-and-bound refinement that runs after
    the first full-depth path: at most ``refine_factor * m`` further forward
    moves hunt for a better leaf.  Underdetermined (regularized) systems
    have near-tie continua that make exhaustive refinement pointless, so the
    cap is what keeps the relaxed search practical; 0 means first-path
    semantics.
    """

    bias: float = 1.2
    step: float = 5.0
    max_nodes: int = 1_000_000
    boundary: str = BOUNDARY_RELAXED
    refine_factor: int = 32

    def __post_init__(self):
        if self.bias <= 0 or self.step <= 0:
            raise ValueError("bias and step must be positive")
        if self.refine_factor < 0:
            raise ValueError("refine_factor must be nonnegative")
        if self.boundary not in (BOUNDARY_RELAXED, BOUNDARY_CLAMP):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")


@dataclass(frozen=True)
class DecodeResult:
    """Decoded coordinates plus search instrumentation."""

    u: np.ndarray
    metric: float
    nodes: int
    status: int

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


def count_nodes(result: DecodeResult) -> int:
    """Nodes visited by the tree search (forward moves, revisits included)."""
    return result.nodes


@njit(cache=True)
def _zigzag_candidate(base, sign, tried, lo, hi, clamp):
    """tried-th zig-zag value around ``base``; ok=False when the box is exhausted."""
    t = tried
    while True:
        if t == 0:
            cand = base
        else:
            k = (t + 1) // 2
            if t % 2 == 1:
                cand = base + sign * k
            else:
                cand = base - sign * k
        if not clamp:
            return cand, t, True
        if lo <= cand <= hi:
            return cand, t, True
        # skip out-of-box candidates; stop once both directions have left the box
        if base - (t + 1) // 2 < lo and base + (t + 1) // 2 > hi:
            return 0, t, False
        t += 1


@njit(cache=True)
def _fano_search(r, y, bias, step, max_nodes, lo, hi, clamp, refine_budget):
    """Fano threshold automaton over the upper-triangular system (R, y).

    Returns (u, metric, nodes, status).  Levels are entered from the last
    coordinate; the path metric at depth d is ``bias*d - E`` with E the
    partial squared residual, and the threshold T moves in multiples of
    ``step``.  After the first leaf the automaton keeps searching with a
    branch-and-bound cutoff at the best leaf residual, stopping when a
    sweep from the root exhausts without any threshold block or when the
    refinement budget runs out.
    """
    m = r.shape[0]
    u = np.zeros(m, np.int64)
    base = np.zeros(m, np.int64)
    sgn = np.zeros(m, np.int64)
    tried = np.zeros(m, np.int64)
    xi = np.zeros(m)
    part = np.zeros(m + 1)  # partial squared residual per depth
    best_u = np.zeros(m, np.int64)
    best_e = np.inf
    found = False
    nodes = 0
    refine_nodes = 0
    t_thresh = 0.0
    depth = 0
    threshold_blocked = False

    # enter the first level
    j = m - 1
    xi[j] = y[j]
    c = xi[j] / r[j, j]
    base[j] = np.int64(np.floor(c + 0.5))
    sgn[j] = 1 if c - base[j] >= 0 else -1
    tried[j] = 0

    while True:
        if depth < m:
            j = m - 1 - depth
            cand, t_new, ok = _zigzag_candidate(base[j], sgn[j], tried[j], lo[j], hi[j], clamp)
            tried[j] = t_new
            hard_block = not ok
            if ok:
                diff = xi[j] - r[j, j] * cand
                e_child = part[depth] + diff * diff
                if found and e_child >= best_e:
                    hard_block = True  # B&B: zig-zag residuals only grow from here
            if not hard_block and ok:
                m_child = bias * (depth + 1) - e_child
                if m_child >= t_thresh:
                    # forward move
                    if nodes >= max_nodes:
                        break
                    if found:
                        refine_nodes += 1
                        if refine_nodes > refine_budget:
                            break
                    nodes += 1
                    m_parent = bias * depth - part[depth]
                    u[j] = cand
                    part[depth + 1] = e_child
                    depth += 1
                    if m_parent < t_thresh + step:
                        # first visit at this threshold: tighten in multiples of step
                        k = np.floor((m_child - t_thresh) / step)
                        t_thresh += step * k
                    if depth == m:
                        if e_child < best_e:
                            best_e = e_child
                            for i in range(m):
                                best_u[i] = u[i]
                            found = True
                        # leaf: fall through to look-back
                    else:
                        jn = m - 1 - depth
                        s = 0.0
                        for l in range(jn + 1, m):
                            s += r[jn, l] * u[l]
                        xi[jn] = y[jn] - s
                        c = xi[jn] / r[jn, jn]
                        base[jn] = np.int64(np.floor(c + 0.5))
                        sgn[jn] = 1 if c - base[jn] >= 0 else -1
                        tried[jn] = 0
                        continue
                else:
                    # threshold block: zig-zag residuals only grow, so the
                    # whole level is blocked at this threshold
                    threshold_blocked = True
                    if depth == 0:
                        t_thresh -= step
                        tried[m - 1] = 0
                        threshold_blocked = False
                        continue
                    # fall through to look-back
            elif depth == 0:
                # root-level hard block (B&B or clamp exhaustion)
                if found and not threshold_blocked:
                    break  # optimal within the cutoff: search complete
                t_thresh -= step
                tried[m - 1] = 0
                threshold_blocked = False
                continue
            # fall through to look-back on hard block at depth > 0

        # look back from current node at `depth`
        if depth == 0:
            # only reachable when depth==m==0 cannot happen; guard anyway
            break
        m_back = bias * (depth - 1) - part[depth - 1]
        if m_back >= t_thresh:
            depth -= 1
            jb = m - 1 - depth
            tried[jb] += 1  # next sibling of the node we just left
            continue
        # cannot move back: lower threshold, re-examine best candidate here
        t_thresh -= step
        if depth < m:
            tried[m - 1 - depth] = 0
        threshold_blocked = False
        continue

    status = STATUS_CONVERGED if (found and nodes < max_nodes) else STATUS_EXHAUSTED
    if nodes >= max_nodes:
        status = STATUS_EXHAUSTED
    if not found:
        # budget ran out before any leaf: complete the current path greedily
        for d in range(depth, m):
            jg = m - 1 - d
            s = 0.0
            for l in range(jg + 1, m):
                s += r[jg, l] * u[l]
            xi_g = y[jg] - s
            c = xi_g / r[jg, jg]
            cand = np.int64(np.floor(c + 0.5))
            if clamp:
                if cand < lo[jg]:
                    cand = lo[jg]
                elif cand > hi[jg]:
                    cand = hi[jg]
            u[jg] = cand
        for i in range(m):
            best_u[i] = u[i]
        best_e = 0.0
        for i in range(m):
            s = 0.0
            for l in range(i, m):
                s += r[i, l] * best_u[l]
            d = y[i] - s
            best_e += d * d
    return best_u, best_e, nodes, status


def fano_decode(system: PreprocessedSystem, config: DecoderConfig = DecoderConfig(),
                code: LatticeCode = None) -> DecodeResult:
    """Fano sequential decoding of a preprocessed system.

    ``code`` supplies the information-set box for clamp mode; in relaxed
    mode (the default, matching the expanded search space of the MMSE-DFE
    Fano decoder) it is ignored.
    """
    r = np.ascontiguousarray(system.generator, dtype=np.float64)
    y = np.ascontiguousarray(system.filtered_obs, dtype=np.float64)
    m = r.shape[0]
    if np.any(np.diag(r) <= 0):
        raise ValueError("composite generator must have strictly positive diagonal")
    clamp = config.boundary == BOUNDARY_CLAMP
    if clamp:
        if code is None:
            raise ValueError("clamp mode needs the lattice code bounds")
        lo = np.ascontiguousarray(code.info_lower, dtype=np.int64)
        hi = np.ascontiguousarray(code.info_upper, dtype=np.int64)
    else:
        lo = np.zeros(m, dtype=np.int64)
        hi = np.zeros(m, dtype=np.int64)
    u, metric, nodes, status = _fano_search(
        r, y, float(config.bias), float(config.step), int(config.max_nodes), lo, hi, clamp,
        int(config.refine_factor) * m,
    )
    return DecodeResult(u=u, metric=float(metric), nodes=int(nodes), status=int(status))


def ml_decode(y, channel, code: LatticeCode, max_size: int = 2_000_000,
              codebook=None) -> np.ndarray:
    """Exact ML over the information set: ``argmin |y - H eta - H G u|^2``.

    Ties break to the lexicographically smallest ``u``.  Only viable for
    desk-scale codebooks; raises ``CodebookTooLargeError`` beyond
    ``max_size`` entries.  Pass a precomputed ``enumerate_codebook`` result
    as ``codebook`` when decoding many observations of one code.
    """
    y = np.asarray(y, dtype=float).ravel()
    channel = np.atleast_2d(np.asarray(channel, dtype=float))
    us, xs = enumerate_codebook(code, max_size) if codebook is None else codebook
    metrics = ((y[None, :] - xs @ channel.T) ** 2).sum(axis=1)
    best = metrics.min()
    ties = np.flatnonzero(metrics <= best + 1e-12 * max(1.0, best))
    if ties.size == 1:
        return us[ties[0]]
    order = np.lexsort(us[ties, ::-1].T)
    return us[ties[order[0]]]
