import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relmeas import linalg
from relmeas.errors import DimensionError, HermiticityError, PositivityError
from relmeas.linalg import _backend

from oracles import (
    BELL,
    SX,
    SZ,
    kron_loops,
    partial_trace_loops,
    proj,
    random_density,
    random_hermitian,
    random_pure_vector,
    spectral_norm,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# ------------------------------------------------------------------ kron


def test_kron_identities():
    assert np.array_equal(linalg.kron(np.eye(2), np.eye(2)), np.eye(4))
    p0 = np.diag([1.0, 0.0])
    assert np.array_equal(linalg.kron(p0, p0), np.diag([1.0, 0, 0, 0]))


def test_kron_matches_double_loop():
    assert np.array_equal(linalg.kron(SX, SZ), kron_loops(SX, SZ))


def test_kron_rectangular_index_convention(rng):
    a = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    b = rng.normal(size=(3, 2))
    out = linalg.kron(a, b)
    assert out.shape == (6, 6)
    assert np.allclose(out, kron_loops(a, b.astype(complex)))
    # row (i_a * b.rows + i_b)
    assert out[1 * 3 + 2, 2 * 2 + 1] == a[1, 2] * b[2, 1]


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_kron_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    lhs = linalg.kron(linalg.kron(a, b), c)
    rhs = linalg.kron(a, linalg.kron(b, c))
    assert linalg.op_distance(lhs, rhs) <= 1e-9


# ------------------------------------------------------------------ partial trace


def test_partial_trace_product_state(rng):
    rho, sigma = random_density(rng, 2), random_density(rng, 3)
    joint = np.kron(rho, sigma)
    assert np.allclose(linalg.partial_trace(joint, (2, 3), over="B"), rho)
    assert np.allclose(linalg.partial_trace(joint, (2, 3), over="A"), sigma)


def test_partial_trace_bell_is_maximally_mixed():
    out = linalg.partial_trace(proj(BELL), (2, 2), over="B")
    assert np.allclose(out, np.eye(2) / 2)


@pytest.mark.parametrize("da,db", [(2, 2), (2, 3), (3, 2), (4, 2)])
def test_partial_trace_matches_loops(rng, da, db):
    m = random_density(rng, da * db)
    for over in ("A", "B"):
        assert np.allclose(linalg.partial_trace(m, (da, db), over=over), partial_trace_loops(m, da, db, over))
    assert abs(np.trace(linalg.partial_trace(m, (da, db), over="B")) - np.trace(m)) <= 1e-9


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(DimensionError):
        linalg.partial_trace(np.eye(4), (2, 3))
    with pytest.raises(ValueError):
        linalg.partial_trace(np.eye(4), (2, 2), over="C")


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(2, 3))
def test_partial_trace_of_kron_scales(seed, da, db):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(da, da)) + 1j * rng.normal(size=(da, da))
    b = rng.normal(size=(db, db)) + 1j * rng.normal(size=(db, db))
    out = linalg.partial_trace(np.kron(a, b), (da, db), over="B")
    assert linalg.op_distance(out, np.trace(b) * a) <= 1e-9


# ------------------------------------------------------------------ eigh


def test_eigh_pauli_z():
    w, v = linalg.eigh(SZ)
    assert np.allclose(w, [1, -1])
    assert np.allclose(np.abs(v), np.eye(2))


def test_eigh_maximally_mixed():
    w, _ = linalg.eigh(np.eye(2) / 2)
    assert np.allclose(w, [0.5, 0.5])


def test_eigh_rejects_non_hermitian():
    with pytest.raises(HermiticityError):
        linalg.eigh(np.array([[0, 1], [0, 0]]))


def test_eigh_random_8x8_against_numpy(rng):
    h = random_hermitian(rng, 8)
    w, v = linalg.eigh(h)
    assert np.all(np.diff(w) <= 0)
    assert spectral_norm(v @ np.diag(w) @ v.conj().T - h) <= 1e-9
    assert np.allclose(w, np.linalg.eigvalsh(h)[::-1], atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 16))
def test_eigh_reconstruction_and_orthonormality(seed, n):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n)
    w, v = linalg.eigh(h)
    assert spectral_norm(v @ np.diag(w) @ v.conj().T - h) <= 1e-9
    assert spectral_norm(v.conj().T @ v - np.eye(n)) <= 1e-9


def test_eigh_degenerate_spectrum(rng):
    u = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))[0]
    h = u @ np.diag([2, 2, 2, -1, -1, 0]) @ u.conj().T
    w, v = linalg.eigh(h)
    assert np.allclose(w, [2, 2, 2, 0, -1, -1], atol=1e-10)
    assert spectral_norm(v.conj().T @ v - np.eye(6)) <= 1e-9


def test_eigh_zero_matrix():
    w, v = linalg.eigh(np.zeros((3, 3)))
    assert np.array_equal(w, np.zeros(3))
    assert np.allclose(v, np.eye(3))


# ------------------------------------------------------------------ kernels


@pytest.mark.skipif(len(_backend.available_backends()) < 2, reason="compiled kernel not built")
@pytest.mark.parametrize("n", [1, 2, 5, 12, 24])
def test_kernels_agree(rng, n):
    h = random_hermitian(rng, n)
    results = {}
    for name in ("python", "compiled"):
        w, v, sweeps = _backend.KERNELS[name](h.copy(), 1e-12, 100, True)
        assert sweeps >= 0
        results[name] = (np.sort(w), v, w)
    assert np.allclose(results["python"][0], results["compiled"][0], atol=1e-11)
    for w, v in ((results[k][2], results[k][1]) for k in results):
        assert spectral_norm(v @ np.diag(w) @ v.conj().T - h) <= 1e-9


def test_use_backend_roundtrip(rng):
    before = linalg.current_backend()
    h = random_hermitian(rng, 6)
    try:
        for name in linalg.available_backends():
            linalg.use_backend(name)
            assert linalg.current_backend() == name
            assert np.allclose(linalg.eigvalsh(h), np.linalg.eigvalsh(h)[::-1], atol=1e-10)
        with pytest.raises(ValueError):
            linalg.use_backend("fortran")
    finally:
        linalg.use_backend(before)


FALLBACK_SCRIPT = """
import sys
sys.modules["relmeas.linalg._jacobi_ext"] = None  # make the extension import fail
from relmeas import linalg
from relmeas.cli import demo_text, run
from relmeas.report import render
from relmeas.scenario import parse_scenario
print(linalg.current_backend(), ",".join(linalg.available_backends()))
sys.stdout.write(render(run(parse_scenario(demo_text("lueders-repeat"))), "json"))
"""


def test_python_fallback_selected_at_import_and_reproduces_golden():
    proc = subprocess.run([sys.executable, "-c", FALLBACK_SCRIPT], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    header, report = proc.stdout.split("\n", 1)
    assert header == "python python"
    assert report == (Path(__file__).parent / "golden" / "lueders-repeat.json").read_text()


# ------------------------------------------------------------------ svd_bipartite


def test_svd_product_vector():
    s, _, _ = linalg.svd_bipartite(np.kron([1, 0], [1, 0]), (2, 2))
    assert np.allclose(s, [1, 0])


def test_svd_bell():
    s, _, _ = linalg.svd_bipartite(BELL, (2, 2))
    assert np.allclose(s, [2**-0.5, 2**-0.5])


def test_svd_length_mismatch():
    with pytest.raises(DimensionError):
        linalg.svd_bipartite(np.ones(5), (2, 3))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 6))
def test_svd_reconstructs_and_normalizes(seed, da, db):
    rng = np.random.default_rng(seed)
    v = random_pure_vector(rng, da * db)
    s, left, right = linalg.svd_bipartite(v, (da, db))
    c = v.reshape(da, db)
    assert abs(np.sum(s**2) - 1.0) <= 1e-10
    assert spectral_norm(left @ np.diag(s) @ right.conj().T - c) <= 1e-9
    assert np.allclose(s, np.linalg.svd(c, compute_uv=False), atol=1e-10)
    k = min(da, db)
    assert spectral_norm(left.conj().T @ left - np.eye(k)) <= 1e-9
    assert spectral_norm(right.conj().T @ right - np.eye(k)) <= 1e-9


def test_svd_rank_deficient(rng):
    # rank one in 3x4, so zero singular values need completed partners
    v = np.kron(random_pure_vector(rng, 3), random_pure_vector(rng, 4))
    s, left, right = linalg.svd_bipartite(v, (3, 4))
    assert np.allclose(s, [1, 0, 0])
    assert spectral_norm(right.conj().T @ right - np.eye(3)) <= 1e-9
    assert spectral_norm(left.conj().T @ left - np.eye(3)) <= 1e-9


# ------------------------------------------------------------------ psd_sqrt, norms


def test_psd_sqrt_examples():
    assert np.allclose(linalg.psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(linalg.psd_sqrt(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]))
    with pytest.raises(PositivityError):
        linalg.psd_sqrt(np.diag([1.0, -1e-3]))
    # tiny negatives are clipped
    r = linalg.psd_sqrt(np.diag([1.0, -1e-12]))
    assert np.allclose(r, np.diag([1.0, 0.0]))


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 8))
def test_psd_sqrt_residual_and_composition(seed, n):
    rng = np.random.default_rng(seed)
    h = random_density(rng, n) * n
    r = linalg.psd_sqrt(h)
    assert spectral_norm(r @ r - h) <= 1e-9
    assert np.allclose(linalg.eigvalsh(linalg.psd_sqrt(r @ r)), linalg.eigvalsh(r), atol=1e-9)


def test_op_distance_examples(rng):
    assert linalg.op_distance(np.eye(3), np.eye(3)) == 0.0
    assert abs(linalg.op_distance(SZ, -SZ) - 2.0) <= 1e-12
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4))
    assert abs(linalg.op_distance(a, b) - linalg.op_distance(b, a)) <= 1e-12
    assert abs(linalg.op_distance(a, b) - spectral_norm(a - b)) <= 1e-9
    with pytest.raises(DimensionError):
        linalg.op_distance(np.eye(2), np.eye(3))


def test_op_norm_rectangular(rng):
    a = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
    assert abs(linalg.op_norm(a) - spectral_norm(a)) <= 1e-9
    assert abs(linalg.op_norm(a.T) - spectral_norm(a)) <= 1e-9


def test_rank_and_unitarity(rng):
    assert linalg.rank(np.diag([1.0, 1e-3, 0.0])) == 2
    q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
    assert linalg.is_unitary(q)
    assert not linalg.is_unitary(2 * q)


def test_complete_basis(rng):
    v = np.linalg.qr(rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2)))[0]
    extra = linalg.complete_basis(v, 5)
    full = np.column_stack([v, extra])
    assert spectral_norm(full.conj().T @ full - np.eye(5)) <= 1e-12


# ------------------------------------------------------------------ tolerances


def test_tolerance_file_override(tmp_path, monkeypatch):
    path = tmp_path / "tol.json"
    path.write_text(json.dumps({"eq_tol": 1e-6}))
    monkeypatch.setenv(linalg.TOLERANCE_ENV, str(path))
    tol = linalg.load_tolerances()
    assert tol.eq_tol == 1e-6 and tol.psd_tol == linalg.DEFAULT_TOL.psd_tol
    path.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ValueError):
        linalg.load_tolerances()
    monkeypatch.delenv(linalg.TOLERANCE_ENV)
    assert linalg.load_tolerances() == linalg.DEFAULT_TOL


def test_tolerances_non_negative():
    with pytest.raises(ValueError):
        linalg.Tolerances(eq_tol=-1.0)
