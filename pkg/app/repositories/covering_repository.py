from pathlib import Path

from app.core.constants import CoveringFamily, ShapeKind
from app.models.covering import Covering
from app.models.patch import FrequencyPatch
from app.repositories.base import BaseRepository
from app.schemas.covering import CoveringDocument, CoveringSummary, PatchDocument, WindowDocument


def patch_params(patch: FrequencyPatch) -> dict[str, float | list[float]]:
    if patch.shape == ShapeKind.ANNULUS:
        return {"inner": patch.inner, "outer": patch.size}
    if patch.shape == ShapeKind.BALL0:
        return {"radius": patch.size}
    if patch.shape == ShapeKind.CUBE:
        return {"center": list(patch.center), "half_side": patch.size}
    return {"center": list(patch.center), "radius": patch.size}


def patch_from_document(document: PatchDocument, d: int) -> FrequencyPatch:
    shape = ShapeKind(document.shape)
    params = document.params
    origin = (0.0,) * d
    if shape == ShapeKind.ANNULUS:
        return FrequencyPatch(id=document.id, index=tuple(document.index), shape=shape, center=origin,
                              size=params["outer"], inner=params["inner"], xi=tuple(document.xi))
    if shape == ShapeKind.BALL0:
        return FrequencyPatch(id=document.id, index=tuple(document.index), shape=shape, center=origin,
                              size=params["radius"], xi=tuple(document.xi))
    size = params["half_side"] if shape == ShapeKind.CUBE else params["radius"]
    return FrequencyPatch(id=document.id, index=tuple(document.index), shape=shape,
                          center=tuple(params["center"]), size=size, xi=tuple(document.xi))


class CoveringRepository(BaseRepository[CoveringDocument]):
    def __init__(self, root: str | Path):
        super().__init__(CoveringDocument, root)

    @staticmethod
    def to_document(covering: Covering, windows: list[WindowDocument] | None = None) -> CoveringDocument:
        certificate = None
        if covering.certificate is not None:
            certificate = CoveringSummary(
                n0=covering.certificate.n0,
                K=covering.certificate.ratio_K,
                ratio_spread=covering.certificate.ratio_spread,
                complete=covering.certificate.complete,
            )
        return CoveringDocument(
            family=covering.family.value,
            alpha=covering.alpha,
            r=covering.r,
            d=covering.d,
            trunc_radius=covering.trunc_radius,
            patches=[
                PatchDocument(id=p.id, index=list(p.index), shape=p.shape.value, params=patch_params(p), xi=list(p.xi))
                for p in covering.patches
            ],
            certificate=certificate,
            windows=windows,
        )

    @staticmethod
    def from_document(document: CoveringDocument) -> Covering:
        """Patches only; the certificate is recomputed by the covering service."""
        return Covering(
            family=CoveringFamily(document.family),
            d=document.d,
            alpha=document.alpha,
            r=document.r,
            trunc_radius=document.trunc_radius,
            patches=tuple(patch_from_document(p, document.d) for p in document.patches),
        )

    def save_covering(self, name: str, covering: Covering, windows: list[WindowDocument] | None = None) -> Path:
        return self.save(name, self.to_document(covering, windows))

    def get_covering(self, name: str) -> tuple[Covering, CoveringDocument] | None:
        document = self.get(name)
        if document is None:
            return None
        return self.from_document(document), document
