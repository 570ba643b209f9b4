import math

import numpy as np
import pytest
import scipy.stats

from mtlab import (
    CovarianceMatrix,
    DisplacedFock,
    EvenOddCoherent,
    FirstMoments,
    Fock,
    Gaussian,
    PhotonAddedCoherent,
    husimi_moments,
    quadrature_moments,
    quadrature_pdf,
    sample_heterodyne,
    sample_homodyne,
)
from mtlab.sampling import SamplingError, dataset_from_csv, derive_key, substream

VACUUM = Gaussian(FirstMoments(0.0, 0.0), CovarianceMatrix(0.5, 0.0, 0.5))

FAMILIES = [
    Gaussian(FirstMoments(0.8, -0.4), CovarianceMatrix(0.3, 0.1, 1.1)),
    Fock(2),
    EvenOddCoherent(1.0, "even"),
    DisplacedFock(0.9, 1),
    PhotonAddedCoherent(0.8, 1),
]


class TestSubstreams:
    def test_derive_key_is_path_sensitive(self):
        assert derive_key(1, 2, 3) != derive_key(1, 3, 2)
        assert derive_key(1) != derive_key(2)

    def test_substream_independence(self):
        a = substream(7, 0).normal(size=5)
        b = substream(7, 1).normal(size=5)
        assert not np.allclose(a, b)
        assert np.allclose(a, substream(7, 0).normal(size=5))


class TestHomodyne:
    def test_size_validation(self):
        with pytest.raises(SamplingError):
            sample_homodyne(VACUUM, 2, 100, seed=0)
        with pytest.raises(SamplingError):
            sample_homodyne(VACUUM, 4, 3, seed=0)

    def test_counts_allocation(self):
        d = sample_homodyne(VACUUM, 4, 10, seed=0)
        assert list(d.counts) == [3, 3, 2, 2]
        assert d.total == 10
        assert np.all(np.diff(d.phases) > 0)
        assert d.phases[0] == 0.0 and d.phases[-1] < math.pi

    def test_determinism(self):
        for s in FAMILIES:
            d1 = sample_homodyne(s, 3, 600, seed=123)
            d2 = sample_homodyne(s, 3, 600, seed=123)
            assert all((a == b).all() for a, b in zip(d1.samples, d2.samples))
            assert d1.to_csv() == d2.to_csv()  # byte-for-byte
            d3 = sample_homodyne(s, 3, 600, seed=124)
            assert not all((a == b).all() for a, b in zip(d1.samples, d3.samples))

    def test_vacuum_variance(self):
        d = sample_homodyne(VACUUM, 4, 400_000, seed=9)
        for xs in d.samples:
            assert np.var(xs) == pytest.approx(0.5, abs=5e-3)

    def test_fock1_moments(self):
        d = sample_homodyne(Fock(1), 3, 3_000_000, seed=3)
        xs = d.samples[0]
        assert np.mean(xs ** 2) == pytest.approx(1.5, abs=0.01)
        assert np.mean(xs ** 4) == pytest.approx(3.75, abs=0.05)

    @pytest.mark.parametrize("state", FAMILIES,
                             ids=lambda s: type(s).__name__)
    def test_kolmogorov_smirnov(self, state):
        # exact samplers at significance 1e-3, N = 1e5 per phase draw
        n = 100_000
        theta = 0.5235987755982988  # pi/6
        d = sample_homodyne(state, 3, 3 * n, seed=11)
        idx = 1  # phase pi/3... phases are k pi/3; use k=1
        xs = np.sort(d.samples[idx])
        th = float(d.phases[idx])
        t = quadrature_moments(state, th)
        half = 10.0 * math.sqrt(t.m2) + abs(t.m1)
        grid = np.linspace(-half, half, 40001)
        dens = quadrature_pdf(state, th, grid)
        cdf_grid = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1])
                                                    * np.diff(grid))])
        cdf_grid /= cdf_grid[-1]
        cdf = np.interp(xs, grid, cdf_grid)
        k = len(xs)
        dplus = np.max(np.arange(1, k + 1) / k - cdf)
        dminus = np.max(cdf - np.arange(0, k) / k)
        dstat = max(dplus, dminus)
        dcrit = math.sqrt(math.log(2.0 / 1e-3) / (2.0 * k))
        assert dstat < dcrit, f"KS {dstat:.5f} >= {dcrit:.5f}"


class TestHeterodyne:
    def test_size_validation(self):
        with pytest.raises(SamplingError):
            sample_heterodyne(VACUUM, 0, seed=0)

    def test_determinism(self):
        for s in FAMILIES:
            a = sample_heterodyne(s, 2000, seed=9).points
            b = sample_heterodyne(s, 2000, seed=9).points
            assert (a == b).all()

    def test_gaussian_covariance_matches_husimi(self):
        s = Gaussian(FirstMoments(1.0, 0.0), CovarianceMatrix(0.25, 0.0, 1.0))
        pts = sample_heterodyne(s, 500_000, seed=21).points
        cov = np.cov(pts.T)
        assert np.allclose(cov, s.g.as_array() + 0.5 * np.eye(2), atol=6e-3)
        assert np.allclose(pts.mean(axis=0), [1.0, 0.0], atol=6e-3)

    def test_fock_radial_law(self):
        n = 3
        pts = sample_heterodyne(Fock(n), 400_000, seed=5).points
        s = 0.5 * (pts[:, 0] ** 2 + pts[:, 1] ** 2)
        # radius^2/2 is Gamma(n+1): mean n+1, variance n+1
        assert s.mean() == pytest.approx(n + 1.0, abs=4 * s.std() / math.sqrt(len(s)))
        ks = scipy.stats.kstest(s, "gamma", args=(n + 1.0,))
        assert ks.pvalue > 1e-3

    @pytest.mark.parametrize("state", FAMILIES,
                             ids=lambda s: type(s).__name__)
    def test_moments_match_husimi_within_4se(self, state):
        n = 1_000_000
        pts = sample_heterodyne(state, n, seed=31).points
        x, p = pts[:, 0], pts[:, 1]
        h = husimi_moments(state)
        monomials = {
            "mx": x, "mp": p, "mxx": x * x, "mxp": x * p, "mpp": p * p,
            "mx4": x ** 4, "mx3p": x ** 3 * p, "mx2p2": x * x * p * p,
            "mxp3": x * p ** 3, "mp4": p ** 4,
        }
        for name, vals in monomials.items():
            se = vals.std() / math.sqrt(n)
            assert abs(vals.mean() - getattr(h, name)) < 4.0 * se + 1e-9, name


class TestCsv:
    def test_homodyne_roundtrip(self):
        d = sample_homodyne(VACUUM, 3, 30, seed=77)
        back = dataset_from_csv(d.to_csv())
        assert back.seed == 77
        assert back.state_kv == d.state_kv
        assert np.allclose(back.phases, d.phases)
        for a, b in zip(back.samples, d.samples):
            assert (a == b).all()

    def test_heterodyne_roundtrip(self):
        d = sample_heterodyne(Fock(1), 25, seed=5)
        back = dataset_from_csv(d.to_csv())
        assert (back.points == d.points).all()
        assert back.state_kv == "family=fock n=1"
