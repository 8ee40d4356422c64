"""The pointwise omni fiber: derivations plus jets with the split pairing.

At a point of an n-dimensional chart the derivations of a trivialized line
bundle form a (n+1)-dimensional space D with frame (d_1 .. d_n, unit), where
the unit is the identity derivation acting as multiplication by 1; the jet
space J is its dual. The omni fiber is their direct sum with the symmetric
pairing <<(d1,a1),(d2,a2)>> = a1(d2) + a2(d1), which has split signature.

Everything here is a single fiber: subspaces, Lagrangian (maximally
isotropic) subspaces, graphs of skew forms and of skew biderivations, and the
fiberwise transform algebra (backward, forward, star sum, gauge, opposite,
products). Families over a chart, smoothness, and constant-rank questions
live in the structures module.

Dirac mode drops the unit direction: D is the plain tangent space of
dimension n and the fiber has dimension 2n. Every operation below is written
against the model so the same code serves both modes, and the same code also
serves both coefficient fields (Fraction pointwise, PolyFn symbolically).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DimensionMismatch,
    ModelMismatch,
    NonSkew,
    NotLagrangian,
)
from .linalg import Matrix, Subspace, one_like
from .scalars import PolyFn

JACOBI = "jacobi"
DIRAC = "dirac"


@dataclass(frozen=True)
class FiberModel:
    """Shape of one omni fiber: base dimension and mode.

    jacobi mode: D has dimension n+1, its last coordinate is the identity
    derivation; ambient dimension 2n+2.
    dirac mode: D is the tangent space of dimension n; ambient dimension 2n.
    """

    base_dim: int
    mode: str = JACOBI

    def __post_init__(self):
        if self.mode not in (JACOBI, DIRAC):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.base_dim < 0:
            raise ValueError("negative base dimension")

    @property
    def d_dim(self):
        return self.base_dim + 1 if self.mode == JACOBI else self.base_dim

    @property
    def ambient_dim(self):
        return 2 * self.d_dim

    @property
    def lagrangian_dim(self):
        return self.d_dim

    @property
    def unit_index(self):
        """Index of the identity derivation inside D, or None in dirac mode."""
        return self.d_dim - 1 if self.mode == JACOBI else None


@dataclass(frozen=True)
class OmniVector:
    """One element of the omni fiber, split into derivation and jet parts."""

    model: FiberModel
    d_part: tuple
    j_part: tuple

    def __post_init__(self):
        if len(self.d_part) != self.model.d_dim or len(self.j_part) != self.model.d_dim:
            raise DimensionMismatch("omni vector parts do not match the model")

    def as_tuple(self):
        return tuple(self.d_part) + tuple(self.j_part)

    @classmethod
    def from_tuple(cls, model, values):
        d = model.d_dim
        if len(values) != 2 * d:
            raise DimensionMismatch("omni vector tuple has wrong length")
        return cls(model, tuple(values[:d]), tuple(values[d:]))


def pairing(u, v):
    """The symmetric product: jet of one applied to derivation of the other."""
    if u.model != v.model:
        raise ModelMismatch("pairing of vectors over different models")
    total = None
    for a, b in zip(u.j_part, v.d_part):
        term = a * b
        total = term if total is None else total + term
    for a, b in zip(v.j_part, u.d_part):
        total = total + a * b
    return total


def pairing_gram(model, zero=Fraction(0)):
    """Gram matrix of the pairing on the standard basis: [[0, I], [I, 0]]."""
    d = model.d_dim
    one = one_like(zero)
    rows = []
    for i in range(2 * d):
        row = [zero] * (2 * d)
        j = i + d if i < d else i - d
        row[j] = one
        rows.append(row)
    return Matrix(rows, cols=2 * d, zero=zero)


def orthogonal(model, space):
    """Orthogonal complement of a subspace of the omni fiber for the pairing."""
    if space.ambient_dim != model.ambient_dim:
        raise DimensionMismatch("subspace does not live in this fiber")
    gram = pairing_gram(model, zero=space.zero)
    if space.dim == 0:
        return Subspace.full_space(model.ambient_dim, zero=space.zero)
    return (space.basis @ gram).kernel()


def is_isotropic(model, space):
    gram = pairing_gram(model, zero=space.zero)
    rows = space.vectors()
    for i, u in enumerate(rows):
        gu = gram.apply(u)
        for v in rows[i:]:
            acc = space.zero
            for a, b in zip(gu, v):
                acc = acc + a * b
            if not _entry_is_zero(acc):
                return False
    return True


def is_lagrangian(model, space):
    return space == orthogonal(model, space)


def _entry_is_zero(e):
    return e.is_zero() if isinstance(e, PolyFn) else e == 0


@dataclass(frozen=True)
class LagrangianSubspace:
    """A maximally isotropic subspace of one omni fiber.

    Validated on construction: the subspace must equal its own orthogonal,
    which pins both the dimension and the isotropy.
    """

    model: FiberModel
    space: Subspace

    def __post_init__(self):
        if self.space.ambient_dim != self.model.ambient_dim:
            raise DimensionMismatch("subspace ambient does not match fiber model")
        if self.space != orthogonal(self.model, self.space):
            raise NotLagrangian(
                f"subspace of dim {self.space.dim} is not maximally isotropic"
            )

    @property
    def dim(self):
        return self.space.dim

    def vectors(self):
        return self.space.vectors()

    def pr_d(self):
        """Projection of the subspace to the derivation part."""
        d = self.model.d_dim
        return Subspace.from_rows(
            [v[:d] for v in self.space.vectors()], d, zero=self.space.zero
        )

    def jet_part_kernel(self):
        """The intersection with the jet space, as a subspace of J coordinates."""
        d = self.model.d_dim
        inter = self.space.intersect(jet_space(self.model, self.space.zero))
        return Subspace.from_rows(
            [v[d:] for v in inter.vectors()], d, zero=self.space.zero
        )

    def contains_unit(self):
        """Whether the identity derivation lies in the derivation projection."""
        if self.model.mode != JACOBI:
            return False
        zero = self.space.zero
        one = one_like(zero)
        unit = [zero] * self.model.d_dim
        unit[self.model.unit_index] = one
        return self.pr_d().contains(tuple(unit))


def derivation_space(model, zero=Fraction(0)):
    """D + 0 as a subspace of the omni fiber."""
    d = model.d_dim
    one = one_like(zero)
    rows = []
    for i in range(d):
        row = [zero] * (2 * d)
        row[i] = one
        rows.append(row)
    return Subspace.from_rows(rows, 2 * d, zero=zero)


def jet_space(model, zero=Fraction(0)):
    """0 + J as a subspace of the omni fiber."""
    d = model.d_dim
    one = one_like(zero)
    rows = []
    for i in range(d):
        row = [zero] * (2 * d)
        row[d + i] = one
        rows.append(row)
    return Subspace.from_rows(rows, 2 * d, zero=zero)


def embed_in_d(model, sub):
    """Embed a subspace of D as (sub + 0) inside the omni fiber."""
    d = model.d_dim
    if sub.ambient_dim != d:
        raise DimensionMismatch("subspace does not live in D")
    zero = sub.zero
    return Subspace.from_rows(
        [tuple(v) + (zero,) * d for v in sub.vectors()], 2 * d, zero=zero
    )


def embed_annihilator(model, sub):
    """The annihilator of a subspace of D, embedded as (0 + ann) in the fiber."""
    d = model.d_dim
    zero = sub.zero
    ann = sub.annihilator()
    return Subspace.from_rows(
        [(zero,) * d + tuple(v) for v in ann.vectors()], 2 * d, zero=zero
    )


def _check_skew(matrix):
    if not matrix.is_skew():
        raise NonSkew("matrix is not skew-symmetric")


def graph_of_form(model, form):
    """The Lagrangian graph of a skew 2-form on D: pairs (d, i_d form)."""
    _check_skew(matrix=form)
    d = model.d_dim
    if form.rows != d:
        raise DimensionMismatch("form size does not match the model")
    zero = form.zero
    one = one_like(zero)
    rows = []
    for i in range(d):
        base = [zero] * d
        base[i] = one
        rows.append(tuple(base) + tuple(form.entries[i]))
    return LagrangianSubspace(
        model, Subspace.from_rows(rows, 2 * d, zero=zero)
    )


def graph_of_biderivation(model, bider):
    """The Lagrangian graph of a skew biderivation: pairs (sharp(a), a)."""
    _check_skew(matrix=bider)
    d = model.d_dim
    if bider.rows != d:
        raise DimensionMismatch("biderivation size does not match the model")
    zero = bider.zero
    one = one_like(zero)
    rows = []
    for k in range(d):
        dual = [zero] * d
        dual[k] = one
        rows.append(tuple(bider.entries[k]) + tuple(dual))
    return LagrangianSubspace(
        model, Subspace.from_rows(rows, 2 * d, zero=zero)
    )


def form_flat_matrix(model, form):
    """The matrix of d -> i_d form as a map D -> J (column convention)."""
    return form.transpose()


def biderivation_sharp_matrix(model, bider):
    """The matrix of a -> sharp(a) as a map J -> D (column convention)."""
    return bider.transpose()


def check_unit_preserved(dphi, source, target):
    """A derivation-level morphism matrix must send unit to unit (jacobi)."""
    if source.mode != target.mode:
        raise ModelMismatch("mixed jacobi/dirac morphism")
    if dphi.rows != target.d_dim or dphi.cols != source.d_dim:
        raise DimensionMismatch(
            f"morphism matrix is {dphi.rows}x{dphi.cols}, expected "
            f"{target.d_dim}x{source.d_dim}"
        )
    if source.mode == JACOBI:
        col = source.unit_index
        for i in range(target.d_dim):
            expected = (
                one_like(dphi.zero) if i == target.unit_index else dphi.zero
            )
            if not _entry_is_zero(dphi.entries[i][col] - expected):
                raise ModelMismatch("morphism does not preserve the identity derivation")


def _relation_matrices(source, target, dphi, factor):
    """The two legs of the linear relation underlying backward and forward.

    On V = D_source + J_target:
      to_target(delta, alpha) = (dphi delta, alpha)           in the target fiber
      to_source(delta, alpha) = (delta, factor^-1 dphi^T alpha) in the source fiber
    """
    zero = dphi.zero
    ds, dt = source.d_dim, target.d_dim
    ident_s = Matrix.identity(ds, zero=zero)
    ident_t = Matrix.identity(dt, zero=zero)
    z_ts = Matrix.zero_matrix(dt, ds, zero=zero)
    z_st = Matrix.zero_matrix(ds, dt, zero=zero)
    to_target = dphi.augment(Matrix.zero_matrix(dt, dt, zero=zero)).stack(
        z_ts.augment(ident_t)
    )
    inv = one_like(zero) / factor
    pullback = dphi.transpose().scale(inv)
    to_source = ident_s.augment(z_st).stack(
        Matrix.zero_matrix(ds, ds, zero=zero).augment(pullback)
    )
    return to_source, to_target


def backward(target_lagr, dphi, factor, source_model=None):
    """Pull a Lagrangian back along a fiberwise morphism.

    dphi is the derivation-level matrix (target.d_dim x source.d_dim) and
    factor is the nonzero trivialization twist; the jet side of the result
    uses factor^-1 dphi^T. The output is Lagrangian for every input.
    """
    target = target_lagr.model
    if source_model is None:
        raise ValueError("backward needs the source fiber model")
    if _entry_is_zero(factor):
        raise ZeroDivisionError("morphism factor must be nonzero")
    check_unit_preserved(dphi, source_model, target)
    to_source, to_target = _relation_matrices(source_model, target, dphi, factor)
    graph = target_lagr.space.preimage(to_target)
    return LagrangianSubspace(source_model, graph.image(to_source))


def forward(source_lagr, dphi, factor, target_model=None):
    """Push a Lagrangian forward along a fiberwise morphism (dual of backward)."""
    source = source_lagr.model
    if target_model is None:
        raise ValueError("forward needs the target fiber model")
    if _entry_is_zero(factor):
        raise ZeroDivisionError("morphism factor must be nonzero")
    check_unit_preserved(dphi, source, target_model)
    to_source, to_target = _relation_matrices(source, target_model, dphi, factor)
    graph = source_lagr.space.preimage(to_source)
    return LagrangianSubspace(target_model, graph.image(to_target))


def star_sum(first, second):
    """Add jet parts over a shared derivation part."""
    if first.model != second.model:
        raise ModelMismatch("star sum of Lagrangians over different models")
    model = first.model
    d = model.d_dim
    zero = first.space.zero
    one = one_like(zero)
    amb = 2 * d
    pairs = Subspace.from_rows(
        [tuple(v) + (zero,) * amb for v in first.vectors()]
        + [(zero,) * amb + tuple(v) for v in second.vectors()],
        2 * amb,
        zero=zero,
    )
    # constrain the two derivation parts to agree
    rows = []
    for i in range(d):
        row = [zero] * (2 * amb)
        row[i] = one
        row[amb + i] = -one
        rows.append(row)
    diag = Matrix(rows, cols=2 * amb, zero=zero).kernel()
    matched = pairs.intersect(diag)
    # (delta, a1, delta, a2) -> (delta, a1 + a2)
    out_rows = []
    for i in range(d):
        row = [zero] * (2 * amb)
        row[i] = one
        out_rows.append(row)
    for i in range(d):
        row = [zero] * (2 * amb)
        row[d + i] = one
        row[amb + d + i] = one
        out_rows.append(row)
    collapse = Matrix(out_rows, cols=2 * amb, zero=zero)
    return LagrangianSubspace(model, matched.image(collapse))


def gauge_matrix(model, form):
    """The shear (delta, a) -> (delta, a + i_delta form) as one matrix."""
    _check_skew(matrix=form)
    d = model.d_dim
    zero = form.zero
    ident = Matrix.identity(d, zero=zero)
    z = Matrix.zero_matrix(d, d, zero=zero)
    return ident.augment(z).stack(form.transpose().augment(ident))


def gauge(lagr, form):
    """Gauge transform of a Lagrangian by a skew 2-form on D."""
    return LagrangianSubspace(
        lagr.model, lagr.space.image(gauge_matrix(lagr.model, form))
    )


def gauge_subspace(model, space, form):
    """The same shear applied to an arbitrary subspace of the omni fiber.

    Subspaces of D alone are first embedded as (sub + 0); this is the meaning
    of the superscript-form operation in all kernel identities."""
    if space.ambient_dim == model.d_dim:
        space = embed_in_d(model, space)
    return space.image(gauge_matrix(model, form))


def cogauge(lagr, bider):
    """The dual shear (delta, a) -> (delta + sharp(a), a) by a skew biderivation."""
    _check_skew(matrix=bider)
    model = lagr.model
    d = model.d_dim
    zero = bider.zero
    ident = Matrix.identity(d, zero=zero)
    z = Matrix.zero_matrix(d, d, zero=zero)
    shear = ident.augment(bider.transpose()).stack(z.augment(ident))
    return LagrangianSubspace(model, lagr.space.image(shear))


def opposite(lagr):
    """Negate the jet parts."""
    model = lagr.model
    d = model.d_dim
    zero = lagr.space.zero
    ident = Matrix.identity(d, zero=zero)
    z = Matrix.zero_matrix(d, d, zero=zero)
    flip = ident.augment(z).stack(z.augment(ident.scale(-1)))
    return LagrangianSubspace(model, lagr.space.image(flip))


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------

def product_model(first, second):
    """The fiber model of the product of two base models.

    jacobi mode: the product carries one extra base direction (the shared
    scaling direction), so base dimensions add plus one; dirac mode is the
    plain product."""
    if first.mode != second.mode:
        raise ModelMismatch("product of fibers in different modes")
    extra = 1 if first.mode == JACOBI else 0
    return FiberModel(first.base_dim + second.base_dim + extra, first.mode)


def product_projections(first, second, zero=Fraction(0)):
    """(model, dp1, dp2): derivation-level projection matrices of the product.

    jacobi coordinates on the product D-space: (first tangent block, second
    tangent block, extra direction, unit). The first projection forgets the
    extra direction; the second adds it to the unit component, which encodes
    that the extra direction generates the scaling action seen by the second
    factor. Both projection factors are 1 at the fiber level.
    """
    model = product_model(first, second)
    one = one_like(zero)
    dp = model.d_dim
    rows1 = []
    for i in range(first.d_dim):
        row = [zero] * dp
        if first.mode == JACOBI and i == first.unit_index:
            row[model.unit_index] = one
        else:
            row[i] = one
        rows1.append(row)
    rows2 = []
    for i in range(second.d_dim):
        row = [zero] * dp
        if second.mode == JACOBI and i == second.unit_index:
            row[model.unit_index] = one
            row[model.unit_index - 1] = one
        else:
            row[first.base_dim + i] = one
        rows2.append(row)
    dp1 = Matrix(rows1, cols=dp, zero=zero)
    dp2 = Matrix(rows2, cols=dp, zero=zero)
    return model, dp1, dp2


def product_fiber(first_lagr, second_lagr):
    """The product Lagrangian over the product fiber model."""
    zero = first_lagr.space.zero
    model, dp1, dp2 = product_projections(
        first_lagr.model, second_lagr.model, zero=zero
    )
    one = one_like(zero)
    pulled1 = backward(first_lagr, dp1, one, source_model=model)
    pulled2 = backward(second_lagr, dp2, one, source_model=model)
    return star_sum(pulled1, pulled2)


def product_form(model1, form1, model2, form2):
    """The skew form on the product fiber pulling back form1 and form2.

    Its graph is the product of the two graphs: pull each form back along the
    corresponding projection and add."""
    zero = form1.zero
    model, dp1, dp2 = product_projections(model1, model2, zero=zero)
    pulled1 = dp1.transpose() @ form1 @ dp1
    pulled2 = dp2.transpose() @ form2 @ dp2
    return model, pulled1 + pulled2
