import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from app.core.config import config
from app.core.constants import CoveringFamily, ShapeKind
from app.core.exceptions import CertificationError
from app.models.covering import Covering, NeighborMap
from app.models.patch import FrequencyPatch, japanese
from app.schemas.covering import CountingReport, CoveringCertificate, PatchRatio

logger = logging.getLogger(__name__)

_BALL, _CUBE, _ANNULUS = 0, 1, 2


def inner_outer_radius(patch: FrequencyPatch) -> tuple[float, float]:
    return patch.inner_outer_radius()


def lattice_id(k: tuple[int, ...]) -> str:
    return "k:" + ",".join(str(v) for v in k)


@dataclass
class _PatchArrays:
    centers: np.ndarray
    sizes: np.ndarray
    codes: np.ndarray
    rad_lo: np.ndarray
    rad_hi: np.ndarray
    bound_centers: np.ndarray
    bound_radii: np.ndarray

    @classmethod
    def of(cls, covering: Covering) -> "_PatchArrays":
        patches = covering.patches
        d = covering.d
        codes = {ShapeKind.BALL: _BALL, ShapeKind.BALL0: _BALL, ShapeKind.CUBE: _CUBE, ShapeKind.ANNULUS: _ANNULUS}
        extents = np.array([p.radial_extent() for p in patches], dtype=float).reshape(-1, 2)
        return cls(
            centers=np.array([p.center for p in patches], dtype=float).reshape(-1, d),
            sizes=np.array([p.size for p in patches], dtype=float),
            codes=np.array([codes[p.shape] for p in patches], dtype=np.int8),
            rad_lo=extents[:, 0],
            rad_hi=extents[:, 1],
            bound_centers=covering.centers(),
            bound_radii=covering.bounding_radii(),
        )


def _intersects(a: _PatchArrays, ia: np.ndarray, b: _PatchArrays, ib: np.ndarray) -> np.ndarray:
    """Interior overlap for pairs (a[ia], b[ib]); every shape pair has a closed form."""
    shrink = 1.0 - config.boundary_epsilon
    ca, cb = a.centers[ia], b.centers[ib]
    sa, sb = a.sizes[ia], b.sizes[ib]
    ka, kb = a.codes[ia], b.codes[ib]
    diff = np.abs(ca - cb)

    ball_ball = np.linalg.norm(ca - cb, axis=1) < (sa + sb) * shrink
    cube_cube = np.max(diff, axis=1) < (sa + sb) * shrink
    cube_size = np.where(ka == _CUBE, sa, sb)
    ball_size = np.where(ka == _CUBE, sb, sa)
    gap = np.linalg.norm(np.maximum(diff - cube_size[:, None], 0.0), axis=1)
    ball_cube = gap < ball_size * shrink
    radial = np.maximum(a.rad_lo[ia], b.rad_lo[ib]) < np.minimum(a.rad_hi[ia], b.rad_hi[ib]) * shrink

    return np.where(
        (ka == _ANNULUS) | (kb == _ANNULUS),
        radial,
        np.where(
            (ka == _CUBE) & (kb == _CUBE),
            cube_cube,
            np.where((ka == _CUBE) | (kb == _CUBE), ball_cube, ball_ball),
        ),
    )


def _lattice(d: int, radius: float) -> np.ndarray:
    """Nonzero integer vectors with |k| <= radius, in lexicographic order."""
    m = int(math.ceil(radius))
    axis = np.arange(-m, m + 1)
    points = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    points = points[np.any(points != 0, axis=1)]
    return points[np.linalg.norm(points, axis=1) <= radius]


class CoveringService:
    def __init__(self, sample_points: int | None = None):
        self.sample_points = sample_points

    # ------------------------------------------------------------------
    # Builders
    # ------------------------------------------------------------------

    def build_ball_covering(self, d: int, alpha: float, r: float | None = None, trunc_radius: float = 50.0) -> Covering:
        """
        Lattice balls B(k|k|^beta, r|k|^beta), k in Z^d \\ {0}.

        With r omitted the default 2 sqrt(d) is certified and, should it fail,
        the smallest passing r in [sqrt(d), 8 sqrt(d)] is found by bisection.
        An explicit r is certified but never rejected; check the certificate.
        """
        return self._build_lattice(CoveringFamily.LATTICE_BALL, d, alpha, r, trunc_radius)

    def build_cube_covering(self, d: int, alpha: float, r: float | None = None, trunc_radius: float = 50.0) -> Covering:
        return self._build_lattice(CoveringFamily.LATTICE_CUBE, d, alpha, r, trunc_radius)

    def _build_lattice(self, family: CoveringFamily, d: int, alpha: float, r: float | None, trunc_radius: float) -> Covering:
        self._check_common(d, trunc_radius)
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"Lattice coverings need 0 <= alpha < 1, got {alpha}; use build_dyadic_covering for alpha = 1")
        if r is not None and r <= 0:
            raise ValueError(f"r must be positive, got {r}")

        if r is not None:
            covering = self._lattice_patches(family, d, alpha, r, trunc_radius)
            covering.certificate = self.certify_alpha_covering(covering)
            if not covering.certificate.complete:
                logger.warning(
                    f"{family.value} covering with r={r} leaves "
                    f"{covering.certificate.uncovered_points} samples of B(0, {trunc_radius}) uncovered"
                )
            return covering

        default_r = 2 * math.sqrt(d)
        covering = self._lattice_patches(family, d, alpha, default_r, trunc_radius)
        if not self._coverage(covering)[0]:
            logger.warning(f"Default r={default_r:.4f} does not cover B(0, {trunc_radius}); searching r")
            covering = self._search_r(family, d, alpha, trunc_radius)
        covering.certificate = self.certify_alpha_covering(covering)
        logger.info(
            f"Built {family.value} covering: d={d}, alpha={alpha}, r={covering.r:.4f}, "
            f"{len(covering)} patches, n0={covering.height_n0}, K={covering.ratio_K:.4f}"
        )
        return covering

    def _search_r(self, family: CoveringFamily, d: int, alpha: float, trunc_radius: float) -> Covering:
        lo, hi = math.sqrt(d), 8 * math.sqrt(d)
        best = self._lattice_patches(family, d, alpha, hi, trunc_radius)
        if not self._coverage(best)[0]:
            logger.error(f"No r in [{lo}, {hi}] covers B(0, {trunc_radius})")
            raise CertificationError(f"{family.value} covering fails certification for every r up to {hi}")
        candidate = self._lattice_patches(family, d, alpha, lo, trunc_radius)
        if self._coverage(candidate)[0]:
            return candidate
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            candidate = self._lattice_patches(family, d, alpha, mid, trunc_radius)
            if self._coverage(candidate)[0]:
                hi, best = mid, candidate
            else:
                lo = mid
        return best

    def _lattice_patches(self, family: CoveringFamily, d: int, alpha: float, r: float, trunc_radius: float) -> Covering:
        beta = alpha / (1 - alpha)
        shape = ShapeKind.BALL if family == CoveringFamily.LATTICE_BALL else ShapeKind.CUBE
        reach = r * (math.sqrt(d) if shape == ShapeKind.CUBE else 1.0)
        bound = reach + trunc_radius ** (1 / (beta + 1)) + 1
        patches = []
        for k in _lattice(d, bound):
            length = float(np.linalg.norm(k))
            scale = length ** beta
            patch = FrequencyPatch(
                id=lattice_id(tuple(int(v) for v in k)),
                index=tuple(int(v) for v in k),
                shape=shape,
                center=tuple(float(v) * scale for v in k),
                size=r * scale,
            )
            if patch.radial_extent()[0] <= trunc_radius:
                patches.append(patch)
        return Covering(family, d, alpha, r, trunc_radius, tuple(patches))

    def build_dyadic_covering(self, d: int, trunc_radius: float) -> Covering:
        """B(0, 1) and the annuli 2^(j-2) <= |xi| <= 2^j meeting B(0, trunc_radius)."""
        self._check_common(d, trunc_radius)
        top = max(0, math.floor(math.log2(trunc_radius)) + 2) if trunc_radius > 0 else 0
        origin = (0.0,) * d
        patches = [FrequencyPatch(id="j:0", index=(0,), shape=ShapeKind.BALL0, center=origin, size=1.0)]
        for j in range(1, top + 1):
            patches.append(FrequencyPatch(
                id=f"j:{j}", index=(j,), shape=ShapeKind.ANNULUS, center=origin, size=2.0 ** j, inner=2.0 ** (j - 2)
            ))
        covering = Covering(CoveringFamily.DYADIC, d, 1.0, 1.0, trunc_radius, tuple(patches))
        covering.certificate = self.certify_alpha_covering(covering)
        logger.info(f"Built dyadic covering: d={d}, levels 0..{top}, n0={covering.height_n0}")
        return covering

    def build_metric_covering(self, d: int, alpha: float, r: float, trunc_radius: float) -> Covering:
        """
        Greedy maximal packing of quarter balls B(xi, r<xi>^alpha / 4), scanned by
        increasing |xi| over a lattice of step r/16 (r/8 in d = 2); the retained
        patches are the half balls B(xi_i, r<xi_i>^alpha / 2).
        """
        self._check_common(d, trunc_radius)
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        if not 0.0 < r < 1.0:
            raise ValueError(f"Metric coverings need 0 < r < 1, got {r}")

        step = r / (16 if d == 1 else 8)
        extent = trunc_radius + r * float(japanese(trunc_radius)) ** alpha
        m = int(math.ceil(extent / step))
        axis = step * np.arange(-m, m + 1)
        candidates = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
        norms = np.linalg.norm(candidates, axis=1)
        keep = norms <= extent
        candidates, norms = candidates[keep], norms[keep]
        order = np.lexsort(tuple(candidates[:, a] for a in reversed(range(d))) + (norms,))
        quarter = 0.25 * r * japanese(norms) ** alpha

        cell = 2 * float(quarter.max())
        buckets: dict[tuple[int, ...], list[int]] = {}
        accepted: list[tuple[float, ...]] = []
        radii: list[float] = []
        offsets = list(itertools.product((-1, 0, 1), repeat=d))
        slack = 1 - 1e-9
        for idx in order:
            point = tuple(float(v) for v in candidates[idx])
            rad = float(quarter[idx])
            key = tuple(math.floor(v / cell) for v in point)
            free = True
            for offset in offsets:
                for other in buckets.get(tuple(a + b for a, b in zip(key, offset)), ()):
                    if math.dist(point, accepted[other]) < (rad + radii[other]) * slack:
                        free = False
                        break
                if not free:
                    break
            if free:
                buckets.setdefault(key, []).append(len(accepted))
                accepted.append(point)
                radii.append(rad)

        patches = []
        for i, (point, rad) in enumerate(zip(accepted, radii)):
            patch = FrequencyPatch(id=f"m:{i}", index=(i,), shape=ShapeKind.BALL, center=point, size=2 * rad)
            if patch.radial_extent()[0] <= trunc_radius:
                patches.append(patch)
        covering = Covering(CoveringFamily.METRIC, d, alpha, r, trunc_radius, tuple(patches))
        covering.certificate = self.certify_alpha_covering(covering)
        if not covering.certificate.complete:
            logger.error(
                f"Metric covering leaves {covering.certificate.uncovered_points} samples uncovered "
                f"(alpha={alpha}, r={r}, trunc_radius={trunc_radius})"
            )
            raise CertificationError("Metric covering does not cover the truncated region")
        logger.info(
            f"Built metric covering: d={d}, alpha={alpha}, r={r}, {len(covering)} patches, n0={covering.height_n0}"
        )
        return covering

    @staticmethod
    def _check_common(d: int, trunc_radius: float):
        if d < 1:
            raise ValueError(f"Dimension must be positive, got {d}")
        if trunc_radius < 0:
            raise ValueError(f"trunc_radius must be non-negative, got {trunc_radius}")

    # ------------------------------------------------------------------
    # Certification
    # ------------------------------------------------------------------

    def certify_alpha_covering(self, covering: Covering, sample_points: int | None = None) -> CoveringCertificate:
        complete, samples, uncovered = self._coverage(covering, sample_points)
        adjacency = self.intersection_graph(covering)
        n0 = max((len(neigh) + 1 for neigh in adjacency), default=0)

        ad = covering.alpha * covering.d
        patch_ratios = []
        ratio_k = 1.0
        for patch in covering.patches:
            r_in, r_out = patch.inner_outer_radius()
            ratio_k = max(ratio_k, r_out / r_in)
            near, far = patch.radial_extent()
            mu = patch.measure()
            patch_ratios.append(PatchRatio(
                id=patch.id,
                ratio_min=mu / float(japanese(far)) ** ad,
                ratio_max=mu / float(japanese(near)) ** ad,
            ))
        ratio_min = min((pr.ratio_min for pr in patch_ratios), default=1.0)
        ratio_max = max((pr.ratio_max for pr in patch_ratios), default=1.0)

        return CoveringCertificate(
            n0=n0,
            ratio_K=ratio_k,
            ratio_min=ratio_min,
            ratio_max=ratio_max,
            ratio_spread=ratio_max / ratio_min,
            complete=complete,
            sample_points=samples,
            uncovered_points=uncovered,
            patch_ratios=patch_ratios,
        )

    def _default_samples(self, d: int) -> int:
        if self.sample_points:
            return self.sample_points
        return config.covering_sample_points if d == 1 else config.covering_sample_points_2d

    def _coverage(self, covering: Covering, sample_points: int | None = None) -> tuple[bool, int, int]:
        """Interior membership of an odd, origin-centred sample lattice of B(0, T)."""
        t = covering.trunc_radius
        if t <= 0:
            return True, 0, 0
        d = covering.d
        m = sample_points or self._default_samples(d)
        m += 1 - m % 2
        axis = np.linspace(-t, t, m)
        covered = np.zeros((m,) * d, dtype=bool)
        for patch in covering.patches:
            lo, hi = patch.bounding_box()
            start = np.searchsorted(axis, lo, side="left")
            stop = np.searchsorted(axis, hi, side="right")
            if np.any(stop <= start):
                continue
            sub_axes = [axis[a:b] for a, b in zip(start, stop)]
            mesh = np.stack(np.meshgrid(*sub_axes, indexing="ij"), axis=-1)
            inside = patch.contains(mesh.reshape(-1, d)).reshape(mesh.shape[:-1])
            region = tuple(slice(a, b) for a, b in zip(start, stop))
            covered[region] |= inside
        radius = np.sqrt(sum(c ** 2 for c in np.meshgrid(*([axis] * d), indexing="ij")))
        in_ball = radius <= t
        uncovered = int(np.count_nonzero(in_ball & ~covered))
        return uncovered == 0, int(np.count_nonzero(in_ball)), uncovered

    def intersection_graph(self, covering: Covering) -> list[np.ndarray]:
        """Neighbour positions of every patch (itself excluded)."""
        count = len(covering)
        if count < 2:
            return [np.zeros(0, dtype=np.int64) for _ in range(count)]
        arrays = _PatchArrays.of(covering)
        tree = cKDTree(arrays.bound_centers)
        pairs = tree.query_pairs(r=2 * float(arrays.bound_radii.max()), output_type="ndarray")
        if len(pairs):
            pairs = pairs[_intersects(arrays, pairs[:, 0], arrays, pairs[:, 1])]
        neighbours: list[list[int]] = [[] for _ in range(count)]
        for i, j in pairs:
            neighbours[i].append(int(j))
            neighbours[j].append(int(i))
        return [np.array(sorted(n), dtype=np.int64) for n in neighbours]

    # ------------------------------------------------------------------
    # Structure between coverings
    # ------------------------------------------------------------------

    def neighbor_map(self, coarse: Covering, fine: Covering) -> NeighborMap:
        if coarse.alpha > fine.alpha:
            raise ValueError(f"neighbor_map needs alpha_coarse <= alpha_fine, got ({coarse.alpha}, {fine.alpha})")
        if not math.isclose(coarse.trunc_radius, fine.trunc_radius):
            raise ValueError(
                f"Coverings must share a truncation radius, got {coarse.trunc_radius} and {fine.trunc_radius}"
            )
        if not len(fine) or not len(coarse):
            return NeighborMap(omega=[() for _ in fine.patches], lam=[() for _ in coarse.patches],
                               omega_upper=[0] * len(fine))
        a = _PatchArrays.of(fine)
        b = _PatchArrays.of(coarse)
        tree = cKDTree(b.bound_centers)
        reach = a.bound_radii + float(b.bound_radii.max())
        candidates = tree.query_ball_point(a.bound_centers, r=reach)

        fi = np.concatenate([np.full(len(c), i, dtype=np.int64) for i, c in enumerate(candidates)])
        cj = np.concatenate([np.asarray(c, dtype=np.int64) for c in candidates])
        hit = _intersects(a, fi, b, cj)
        upper = np.linalg.norm(a.bound_centers[fi] - b.bound_centers[cj], axis=1) < a.bound_radii[fi] + b.bound_radii[cj]

        omega: list[list[int]] = [[] for _ in range(len(fine))]
        lam: list[list[int]] = [[] for _ in range(len(coarse))]
        for i, j in zip(fi[hit], cj[hit]):
            omega[i].append(int(j))
            lam[j].append(int(i))
        omega_upper = np.bincount(fi[upper], minlength=len(fine)).tolist()
        return NeighborMap(
            omega=[tuple(sorted(o)) for o in omega],
            lam=[tuple(sorted(l)) for l in lam],
            omega_upper=[int(v) for v in omega_upper],
        )

    def counting_report(self, coarse: Covering, fine: Covering, nmap: NeighborMap | None = None) -> CountingReport:
        nmap = nmap or self.neighbor_map(coarse, fine)
        exponent = fine.d * (fine.alpha - coarse.alpha)
        fine_weights = np.array([float(japanese(np.linalg.norm(p.xi))) for p in fine.patches])
        coarse_weights = np.array([float(japanese(np.linalg.norm(p.xi))) for p in coarse.patches])
        sizes = np.array([len(o) for o in nmap.omega], dtype=float)
        omega_ratio = sizes / fine_weights ** exponent
        upper_ratio = np.asarray(nmap.omega_upper, dtype=float) / fine_weights ** exponent

        comparability = 1.0
        for i, members in enumerate(nmap.omega):
            if members:
                ratios = fine_weights[i] / coarse_weights[list(members)]
                comparability = max(comparability, float(ratios.max()), float((1 / ratios).max()))

        return CountingReport(
            omega_ratio_max=float(omega_ratio.max(initial=0.0)),
            omega_upper_ratio_max=float(upper_ratio.max(initial=0.0)),
            lambda_max=max((len(l) for l in nmap.lam), default=0),
            comparability=comparability,
            fine_patches=len(fine),
            coarse_patches=len(coarse),
        )

    def disjointize(self, covering: Covering) -> list[list[int]]:
        """Greedy colouring of the intersection graph; each class is pairwise disjoint."""
        adjacency = self.intersection_graph(covering)
        colours = np.full(len(covering), -1, dtype=np.int64)
        for i, neigh in enumerate(adjacency):
            taken = {int(colours[j]) for j in neigh if colours[j] >= 0}
            colour = 0
            while colour in taken:
                colour += 1
            colours[i] = colour
        classes = [[] for _ in range(int(colours.max(initial=-1)) + 1)]
        for i, colour in enumerate(colours):
            classes[colour].append(i)
        logger.info(f"Disjointized {len(covering)} patches into {len(classes)} classes")
        return classes
