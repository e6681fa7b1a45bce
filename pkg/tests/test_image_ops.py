import math
import unittest
import numpy as np

from cascadesr.errors import ParameterError, NumericError
from cascadesr.image.ops import (
    as_plane, gaussian_kernel, delta_kernel, convolve_circular, correlate_circular,
    shift_subpixel, shift_subpixel_adjoint, decimate, upsample_zero, resize_bicubic,
    cubic_weight, gradient_forward, gradient_adjoint, GradientPair,
)
from tests.utils import dense_matrix


def _dot(a, b):
    return float(np.sum(a * b))


class TestKernels(unittest.TestCase):
    def test_gaussian_kernel(self):
        k = gaussian_kernel(1.5, 4)
        self.assertEqual(k.shape, (9, 9))
        self.assertAlmostEqual(k.sum(), 1.0, delta=1e-12)
        np.testing.assert_array_equal(k, k[::-1, ::-1])
        np.testing.assert_array_equal(k, k.T)

    def test_gaussian_center_value(self):
        k = gaussian_kernel(1.0, 2)
        total = sum(math.exp(-(i * i + j * j) / 2.0) for i in range(-2, 3) for j in range(-2, 3))
        self.assertAlmostEqual(k[2, 2], 1.0 / total, delta=1e-15)

    def test_bad_kernel_args(self):
        with self.assertRaises(ParameterError):
            gaussian_kernel(0.0, 2)
        with self.assertRaises(ParameterError):
            gaussian_kernel(1.0, 0)
        with self.assertRaises(ParameterError):
            convolve_circular(np.zeros((4, 4)), gaussian_kernel(1.0, 3))

    def test_non_finite_input(self):
        img = np.zeros((4, 4))
        img[1, 1] = np.nan
        with self.assertRaises(NumericError):
            as_plane(img)
        with self.assertRaises(ParameterError):
            as_plane(np.zeros((2, 2, 2)))


class TestConvolution(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.x = rng.random((8, 8))
        self.y = rng.random((8, 8))
        self.k = rng.random((3, 3))

    def test_identity_and_constant(self):
        np.testing.assert_array_equal(convolve_circular(self.x, delta_kernel(1)), self.x)
        np.testing.assert_array_equal(correlate_circular(self.x, delta_kernel(1)), self.x)
        const = np.full((8, 8), 0.3)
        np.testing.assert_allclose(convolve_circular(const, gaussian_kernel(1.0, 2)), const, atol=1e-15)

    def test_dense_matrix(self):
        h, w = self.x.shape
        r = 1
        m = np.zeros((h * w, h * w))
        for y in range(h):
            for x in range(w):
                for a in range(3):
                    for b in range(3):
                        m[y * w + x, ((y + r - a) % h) * w + (x + r - b) % w] += self.k[a, b]
        np.testing.assert_allclose(dense_matrix(lambda z: convolve_circular(z, self.k), (8, 8)), m, atol=1e-12)

    def test_adjoint(self):
        lhs = _dot(convolve_circular(self.x, self.k), self.y)
        rhs = _dot(self.x, correlate_circular(self.y, self.k))
        self.assertAlmostEqual(lhs, rhs, delta=1e-12)

    def test_symmetric_kernel(self):
        k = gaussian_kernel(1.2, 2)
        np.testing.assert_allclose(convolve_circular(self.x, k), correlate_circular(self.x, k), atol=1e-15)


class TestShift(unittest.TestCase):
    def test_zero_and_integer(self):
        rng = np.random.default_rng(1)
        x = rng.random((8, 8))
        np.testing.assert_array_equal(shift_subpixel(x, 0, 0), x)
        np.testing.assert_array_equal(shift_subpixel_adjoint(x, 0, 0), x)
        np.testing.assert_array_equal(shift_subpixel(x, 3, -2), np.roll(x, (-2, 3), axis=(0, 1)))
        np.testing.assert_array_equal(shift_subpixel_adjoint(x, 3, -2), np.roll(x, (2, -3), axis=(0, 1)))

    def test_dense_bilinear_matrix(self):
        dx, dy = 0.3, -1.7
        h = w = 8
        m = np.zeros((h * w, h * w))
        for r in range(h):
            for c in range(w):
                sy, sx = r - dy, c - dx
                y0, x0 = math.floor(sy), math.floor(sx)
                ay, ax = sy - y0, sx - x0
                for yy, wy in ((y0, 1 - ay), (y0 + 1, ay)):
                    for xx, wx in ((x0, 1 - ax), (x0 + 1, ax)):
                        m[r * w + c, (yy % h) * w + xx % w] += wy * wx
        np.testing.assert_allclose(dense_matrix(lambda z: shift_subpixel(z, dx, dy), (8, 8)), m, atol=1e-12)
        np.testing.assert_allclose(dense_matrix(lambda z: shift_subpixel_adjoint(z, dx, dy), (8, 8)), m.T, atol=1e-12)

    def test_adjoint(self):
        rng = np.random.default_rng(2)
        x, y = rng.random((12, 10)), rng.random((12, 10))
        for dx, dy in [(0.25, 0.5), (-1.3, 2.9), (3.0, 0.75)]:
            lhs = _dot(shift_subpixel(x, dx, dy), y)
            rhs = _dot(x, shift_subpixel_adjoint(y, dx, dy))
            self.assertAlmostEqual(lhs, rhs, delta=1e-12)


class TestSampling(unittest.TestCase):
    def test_decimate(self):
        rng = np.random.default_rng(3)
        x = rng.random((8, 8))
        np.testing.assert_array_equal(decimate(x, 1), x)
        np.testing.assert_array_equal(decimate(np.full((8, 8), 0.4), 4), np.full((2, 2), 0.4))
        for s in (1, 2, 4):
            d = dense_matrix(lambda z: decimate(z, s), (8, 8))
            u = dense_matrix(lambda z: upsample_zero(z, s), (8 // s, 8 // s))
            np.testing.assert_array_equal(d, u.T)
            y = rng.random((8 // s, 8 // s))
            self.assertAlmostEqual(_dot(decimate(x, s), y), _dot(x, upsample_zero(y, s)), delta=1e-12)
            np.testing.assert_array_equal(decimate(upsample_zero(y, s), s), y)
        with self.assertRaises(ParameterError):
            decimate(np.zeros((6, 6)), 4)

    def test_bicubic(self):
        rng = np.random.default_rng(4)
        x = rng.random((9, 7))
        np.testing.assert_allclose(resize_bicubic(x, 1), x, atol=1e-12)
        np.testing.assert_allclose(resize_bicubic(np.full((5, 6), 0.7), 3), np.full((15, 18), 0.7), atol=1e-12)
        self.assertEqual(resize_bicubic(x, 2).shape, (18, 14))
        np.testing.assert_allclose(decimate(resize_bicubic(x, 2), 2), x, atol=1e-12)

    def test_bicubic_ramp(self):
        ramp = np.tile(np.arange(10, dtype=np.float64) ** 2, (4, 1))
        up = resize_bicubic(ramp, 2)
        for j in range(4, 14):
            t = j / 2.0
            i0 = math.floor(t)
            expected = sum(float(cubic_weight(t - (i0 + o))) * (i0 + o) ** 2 for o in (-1, 0, 1, 2))
            self.assertAlmostEqual(up[1, j], expected, delta=1e-12)
        # cubic convolution reproduces linear functions
        lin = np.tile(np.arange(10, dtype=np.float64), (4, 1))
        np.testing.assert_allclose(resize_bicubic(lin, 2)[:, 4:14], np.tile(np.arange(4, 14) / 2.0, (8, 1)), atol=1e-12)


class TestGradient(unittest.TestCase):
    def test_constant_and_ramp(self):
        g = gradient_forward(np.full((6, 6), 0.2))
        np.testing.assert_array_equal(g.gx, 0)
        np.testing.assert_array_equal(g.gy, 0)
        ramp = np.tile(np.arange(6, dtype=np.float64), (6, 1))
        np.testing.assert_array_equal(gradient_forward(ramp).gx[:, :-1], 1.0)
        np.testing.assert_array_equal(gradient_adjoint(gradient_forward(np.full((5, 5), 3.0))), 0)
        np.testing.assert_array_equal(gradient_adjoint(GradientPair(np.zeros((4, 4)), np.zeros((4, 4)))), 0)

    def test_adjoint_dense(self):
        rng = np.random.default_rng(5)
        x = rng.random((8, 8))
        p, q = rng.random((8, 8)), rng.random((8, 8))
        g = gradient_forward(x)
        self.assertAlmostEqual(_dot(g.gx, p) + _dot(g.gy, q), _dot(x, gradient_adjoint(GradientPair(p, q))), delta=1e-12)
        gx = dense_matrix(lambda z: gradient_forward(z).gx, (8, 8))
        gy = dense_matrix(lambda z: gradient_forward(z).gy, (8, 8))
        adj = dense_matrix(lambda z: gradient_adjoint(GradientPair(z, np.zeros_like(z))), (8, 8))
        np.testing.assert_allclose(adj, gx.T, atol=1e-12)
        adj = dense_matrix(lambda z: gradient_adjoint(GradientPair(np.zeros_like(z), z)), (8, 8))
        np.testing.assert_allclose(adj, gy.T, atol=1e-12)


if __name__ == '__main__':
    unittest.main()
