"""Linear-elastic constant-strain tetrahedra solved by preconditioned conjugate gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import EmptySetError, NonConvergenceError, SingularSystemError
from .geometry import normalize_location
from .mesher import Mesh, boundary_faces, signed_volumes

GRAVITY = 9.81
AXIS_INDEX = {"X": 0, "Y": 1, "Z": 2}


@dataclass(frozen=True)
class LoadStep:
    name: str
    factor: float
    index: int


LOAD_SPECTRUM = (
    LoadStep("cruise", 1.0, 1),
    LoadStep("pull_up_maneuver", 2.5, 2),
    LoadStep("gust", 1.8, 3),
    LoadStep("landing", 3.0, 4),
    LoadStep("gag_1", 0.5, 5),
    LoadStep("gag_2", 1.5, 6),
    LoadStep("gag_3", 0.75, 7),
    LoadStep("gag_4", 1.25, 8),
)
GAG_STEPS = (5, 6, 7, 8)
PRECONDITIONERS = ("amg", "jacobi")
VERIFY_STEP = 2


@dataclass
class FieldSolution:
    displacement: np.ndarray  # (N, 3) m
    stress: np.ndarray  # (M, 6) Pa: xx, yy, zz, xy, yz, zx
    von_mises: np.ndarray  # (M,) Pa
    reactions: np.ndarray  # (N, 3) N, nonzero only at constrained DOFs
    applied: np.ndarray  # (N, 3) N
    iterations: int
    residual: float
    residual_history: list = field(default_factory=list, repr=False)
    converged: bool = True

    def scaled(self, factor: float) -> "FieldSolution":
        return FieldSolution(
            self.displacement * factor,
            self.stress * factor,
            self.von_mises * abs(factor),
            self.reactions * factor,
            self.applied * factor,
            self.iterations,
            self.residual,
            self.residual_history,
            self.converged,
        )

    @property
    def max_von_mises(self) -> float:
        return float(self.von_mises.max()) if len(self.von_mises) else 0.0

    @property
    def max_displacement(self) -> float:
        return float(np.linalg.norm(self.displacement, axis=1).max()) if len(self.displacement) else 0.0


def elasticity_matrix(E: float, nu: float) -> np.ndarray:
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] = lam + 2 * mu
    D[np.arange(3, 6), np.arange(3, 6)] = mu
    return D


def shape_gradients(nodes, elements):
    """Constant shape-function gradients (M, 4, 3) and signed volumes (M,)."""
    p = nodes[elements]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)  # rows are edge vectors
    Jinv = np.linalg.inv(J)
    g123 = np.transpose(Jinv, (0, 2, 1))  # gradient of N1..N3
    g0 = -g123.sum(axis=1, keepdims=True)
    return np.concatenate([g0, g123], axis=1), signed_volumes(nodes, elements)


def strain_matrices(grads) -> np.ndarray:
    """B matrices (M, 6, 12) mapping nodal displacements to engineering strain."""
    M = len(grads)
    B = np.zeros((M, 6, 12))
    gx, gy, gz = grads[:, :, 0], grads[:, :, 1], grads[:, :, 2]
    B[:, 0, 0::3] = gx
    B[:, 1, 1::3] = gy
    B[:, 2, 2::3] = gz
    B[:, 3, 0::3] = gy
    B[:, 3, 1::3] = gx
    B[:, 4, 1::3] = gz
    B[:, 4, 2::3] = gy
    B[:, 5, 0::3] = gz
    B[:, 5, 2::3] = gx
    return B


def _dofs(elements) -> np.ndarray:
    return (3 * elements[:, :, None] + np.arange(3)).reshape(len(elements), 12)


def assemble_stiffness(mesh: Mesh, E: float, nu: float, chunk: int = 20000) -> sp.csr_matrix:
    D = elasticity_matrix(E, nu)
    n = 3 * mesh.n_nodes
    K = sp.csr_matrix((n, n))
    for s in range(0, mesh.n_elements, chunk):
        el = mesh.elements[s : s + chunk]
        grads, vol = shape_gradients(mesh.nodes, el)
        B = strain_matrices(grads)
        ke = np.einsum("eji,jk,ekl->eil", B, D, B) * np.abs(vol)[:, None, None]
        ke = 0.5 * (ke + ke.transpose(0, 2, 1))  # exact symmetry
        dofs = _dofs(el)
        rows = np.repeat(dofs, 12, axis=1).ravel()
        cols = np.tile(dofs, (1, 12)).ravel()
        K = K + sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K


def von_mises(stress) -> np.ndarray:
    s = np.atleast_2d(np.asarray(stress, dtype=float))
    sxx, syy, szz, sxy, syz, szx = s.T
    return np.sqrt(0.5 * ((sxx - syy) ** 2 + (syy - szz) ** 2 + (szz - sxx) ** 2) + 3.0 * (sxy**2 + syz**2 + szx**2))


def element_stresses(mesh: Mesh, u, E: float, nu: float, chunk: int = 50000) -> np.ndarray:
    D = elasticity_matrix(E, nu)
    out = np.empty((mesh.n_elements, 6))
    flat = np.asarray(u).reshape(-1)
    for s in range(0, mesh.n_elements, chunk):
        el = mesh.elements[s : s + chunk]
        grads, _ = shape_gradients(mesh.nodes, el)
        ue = flat[_dofs(el)]
        strain = np.einsum("eij,ej->ei", strain_matrices(grads), ue)
        out[s : s + chunk] = strain @ D.T
    return out


def rigid_body_modes(nodes) -> np.ndarray:
    n = len(nodes)
    R = np.zeros((3 * n, 6))
    x, y, z = nodes.T
    for a in range(3):
        R[a::3, a] = 1.0
    R[0::3, 3], R[1::3, 3] = -y, x
    R[1::3, 4], R[2::3, 4] = -z, y
    R[0::3, 5], R[2::3, 5] = z, -x
    return R


def check_constraints(nodes, fixed_dofs) -> None:
    """Raise SingularSystemError unless the fixed DOFs suppress all six rigid modes."""
    fixed_dofs = np.asarray(fixed_dofs, dtype=np.int64)
    if len(fixed_dofs) == 0:
        raise SingularSystemError("no constrained DOFs: rigid-body motion is unrestrained")
    used = np.unique(fixed_dofs // 3)
    centre = nodes.mean(axis=0)
    scale = max(float(np.ptp(nodes, axis=0).max()), 1e-300)
    R = rigid_body_modes((nodes - centre) / scale)[fixed_dofs]
    sv = np.linalg.svd(R, compute_uv=False)
    if len(used) == 0 or sv.size < 6 or sv[5] < 1e-9 * sv[0]:
        raise SingularSystemError("constraints leave rigid-body modes free")


def jacobi_preconditioner(A):
    d = A.diagonal()
    if np.any(d <= 0):
        raise SingularSystemError("stiffness matrix has a non-positive diagonal entry")
    inv_d = 1.0 / d
    return lambda r: inv_d * r


def amg_preconditioner(A, near_nullspace):
    """One smoothed-aggregation V-cycle with rigid-body near-nullspace candidates."""
    import pyamg

    ml = pyamg.smoothed_aggregation_solver(
        A, B=near_nullspace, symmetry="hermitian", smooth="energy", max_coarse=500, coarse_solver="splu"
    )
    M = ml.aspreconditioner(cycle="V")
    return lambda r: M @ r


def pcg(A, b, tol: float = 1e-8, max_iter: int = 10000, precondition=None):
    """Preconditioned conjugate gradients on SPD ``A`` (Jacobi unless ``precondition`` is given).

    Stops when ||r|| <= tol * ||b||. Returns (x, iterations, history) where
    history holds relative residuals; raises NonConvergenceError otherwise.
    """
    b = np.asarray(b, dtype=float)
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        return np.zeros_like(b), 0, [0.0]
    apply_m = precondition or jacobi_preconditioner(A)
    x = np.zeros_like(b)
    r = b.copy()
    z = apply_m(r)
    p = z.copy()
    rz = float(r @ z)
    history = [1.0]
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise SingularSystemError("stiffness matrix is not positive definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rel = float(np.linalg.norm(r)) / nb
        history.append(rel)
        if rel <= tol:
            return x, it, history
        z = apply_m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(
        f"CG did not reach relative residual {tol:g} in {max_iter} iterations (last {history[-1]:.3e})",
        residual_history=history,
    )


# --------------------------------------------------------------------------
# loads and boundary conditions
# --------------------------------------------------------------------------

def node_set(mesh: Mesh, location: str) -> np.ndarray:
    name = normalize_location(location)
    if name not in mesh.node_sets:
        raise EmptySetError(f"mesh has no node set for location {location!r}")
    nodes = mesh.node_sets[name]
    if len(nodes) == 0:
        raise EmptySetError(f"node set {name!r} is empty")
    return nodes


def tributary_weights(mesh: Mesh, nodes) -> np.ndarray:
    """Per-node share of the boundary area spanned by faces lying in the set.

    Falls back to equal shares when the set holds no complete boundary face.
    """
    in_set = np.zeros(mesh.n_nodes, dtype=bool)
    in_set[nodes] = True
    faces, _ = boundary_faces(mesh.elements)
    faces = faces[np.all(in_set[faces], axis=1)]
    w = np.zeros(mesh.n_nodes)
    if len(faces):
        p = mesh.nodes[faces]
        area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
        np.add.at(w, faces.ravel(), np.repeat(area / 3.0, 3))
    weights = w[nodes]
    total = weights.sum()
    if total <= 0:
        return np.full(len(nodes), 1.0 / len(nodes)), 0.0
    return weights / total, float(total)


def mass(mesh: Mesh, density: float) -> float:
    return float(density * np.abs(mesh.element_volumes()).sum())


def load_vector(mesh: Mesh, loads, density: float) -> np.ndarray:
    """Nodal force array (N, 3) for the baseline (1.0 g) load case."""
    F = np.zeros((mesh.n_nodes, 3))
    for load in loads:
        nodes = node_set(mesh, load.location)
        weights, area = tributary_weights(mesh, nodes)
        axis, sign = load.direction
        if load.kind == "force":
            total = load.magnitude
        elif load.kind == "pressure":
            total = load.magnitude * area
        elif load.kind == "acceleration_factor":
            total = mass(mesh, density) * GRAVITY * load.magnitude
        else:
            raise ValueError(f"unsupported load kind {load.kind!r}")
        total *= sign * getattr(load, "gain", 1.0)
        np.add.at(F[:, AXIS_INDEX[axis]], nodes, total * weights)
    return F


def fixed_dofs(mesh: Mesh, bcs) -> np.ndarray:
    out = []
    for bc in bcs:
        nodes = node_set(mesh, bc.location)
        for axis in bc.constrained_dofs:
            out.append(3 * nodes + AXIS_INDEX[axis])
    if not out:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.concatenate(out))


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------

@dataclass
class LinearSystem:
    mesh: Mesh
    E: float
    nu: float
    K: sp.csr_matrix
    fixed: np.ndarray
    free: np.ndarray
    K_ff: sp.csr_matrix
    preconditioner: str = "amg"
    _apply_m: object = field(default=None, repr=False)

    @classmethod
    def build(cls, mesh: Mesh, material, bcs, preconditioner: str = "amg") -> "LinearSystem":
        fixed = fixed_dofs(mesh, bcs)
        check_constraints(mesh.nodes, fixed)
        K = assemble_stiffness(mesh, material.youngs_modulus, material.poissons_ratio)
        mask = np.ones(3 * mesh.n_nodes, dtype=bool)
        mask[fixed] = False
        free = np.nonzero(mask)[0]
        K_ff = K[free][:, free].tocsr()
        if preconditioner not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {preconditioner!r}")
        return cls(mesh, material.youngs_modulus, material.poissons_ratio, K, fixed, free, K_ff, preconditioner)

    def precondition(self):
        if self._apply_m is None:
            if self.preconditioner == "jacobi":
                self._apply_m = jacobi_preconditioner(self.K_ff)
            else:
                nodes = self.mesh.nodes
                scale = max(float(np.ptp(nodes, axis=0).max()), 1e-300)
                modes = rigid_body_modes((nodes - nodes.mean(axis=0)) / scale)[self.free]
                self._apply_m = amg_preconditioner(self.K_ff, modes)
        return self._apply_m

    def solve(self, F, tol: float = 1e-8, max_iter: int = 10000) -> FieldSolution:
        f = np.asarray(F, dtype=float).reshape(-1)
        u = np.zeros_like(f)
        u_f, iters, hist = pcg(self.K_ff, f[self.free], tol, max_iter, self.precondition())
        u[self.free] = u_f
        reactions = np.zeros_like(f)
        reactions[self.fixed] = (self.K @ u)[self.fixed] - f[self.fixed]
        stress = element_stresses(self.mesh, u, self.E, self.nu)
        return FieldSolution(
            displacement=u.reshape(-1, 3),
            stress=stress,
            von_mises=von_mises(stress),
            reactions=reactions.reshape(-1, 3),
            applied=f.reshape(-1, 3),
            iterations=iters,
            residual=hist[-1],
            residual_history=hist,
        )


def assemble_and_solve(mesh: Mesh, material, loads, bcs, tol: float = 1e-8, max_iter: int = 10000,
                       preconditioner: str = "amg") -> FieldSolution:
    """Solve one static load case; ``loads`` is a list of LoadSpec or an (N, 3) force array."""
    system = LinearSystem.build(mesh, material, bcs, preconditioner)
    F = loads if isinstance(loads, np.ndarray) else load_vector(mesh, loads, material.density)
    return system.solve(F, tol, max_iter)


def equilibrium_residual(sol: FieldSolution) -> float:
    """Relative mismatch between summed reactions and summed applied loads."""
    applied = sol.applied.sum(axis=0)
    reaction = sol.reactions.sum(axis=0)
    scale = max(float(np.abs(sol.applied).sum(axis=0).max()), 1e-300)
    return float(np.abs(applied + reaction).max() / scale)


@dataclass
class SpectrumResult:
    steps: tuple[LoadStep, ...]
    baseline: FieldSolution
    per_step_max_vm: list[float]
    per_step_max_disp: list[float]
    verification_rel_error: float
    verification_step: int

    def step_solution(self, index: int) -> FieldSolution:
        return self.baseline.scaled(self.steps[index - 1].factor)


def run_load_spectrum(mesh: Mesh, material, baseline_loads, bcs, tol: float = 1e-8, max_iter: int = 10000,
                      steps=LOAD_SPECTRUM, verify_step: int | None = VERIFY_STEP,
                      preconditioner: str = "amg") -> SpectrumResult:
    """Solve the 1.0 g case, scale it to every step and check one step by a full re-solve."""
    system = LinearSystem.build(mesh, material, bcs, preconditioner)
    F = baseline_loads if isinstance(baseline_loads, np.ndarray) else load_vector(mesh, baseline_loads, material.density)
    base = system.solve(F, tol, max_iter)
    per_vm = [abs(s.factor) * base.max_von_mises for s in steps]
    per_disp = [abs(s.factor) * base.max_displacement for s in steps]
    rel = 0.0
    if verify_step is not None:
        factor = steps[verify_step - 1].factor
        check = system.solve(factor * F, tol, max_iter)
        scaled = base.displacement * factor
        rel = float(np.linalg.norm(check.displacement - scaled) / max(np.linalg.norm(check.displacement), 1e-300))
    return SpectrumResult(tuple(steps), base, per_vm, per_disp, rel, verify_step or 0)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

METRIC_FIELDS = {
    "von_mises_stress": ("max_vm_stress_pa", "per_step_max_vm_pa"),
    "displacement": ("max_disp_m",),
    "mass": ("mass_kg",),
}
DEFAULT_METRICS = ("von_mises_stress", "displacement", "mass")


def extract_results(result, mesh: Mesh, material, requested=DEFAULT_METRICS, case_index: int = 0,
                    params: dict | None = None, converged: bool = True) -> dict:
    """JSON-ready metrics record with stable field names.

    ``result`` is a SpectrumResult, a FieldSolution, or None for a failed case.
    Only the fields belonging to ``requested`` metrics appear; stress and
    displacement fields are omitted when the case did not converge.
    """
    unknown = set(requested) - set(METRIC_FIELDS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    ok = converged and result is not None
    rec = {"case_index": int(case_index), "params": dict(params or {}), "converged": bool(ok)}
    if "mass" in requested:
        rec["mass_kg"] = mass(mesh, material.density)
    if not ok:
        return rec
    if isinstance(result, SpectrumResult):
        per_vm, per_disp = result.per_step_max_vm, result.per_step_max_disp
    else:
        per_vm, per_disp = [result.max_von_mises], [result.max_displacement]
    if "von_mises_stress" in requested:
        rec["max_vm_stress_pa"] = float(max(per_vm))
        rec["per_step_max_vm_pa"] = [float(v) for v in per_vm]
    if "displacement" in requested:
        rec["max_disp_m"] = float(max(per_disp))
    return rec


def cantilever_tip_deflection(P: float, L: float, E: float, width: float, height: float) -> float:
    """Euler-Bernoulli tip deflection of an end-loaded cantilever."""
    return P * L**3 / (3.0 * E * width * height**3 / 12.0)
