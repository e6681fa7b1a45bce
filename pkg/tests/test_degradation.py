import os
import tempfile
import unittest
import numpy as np

from cascadesr.errors import ParameterError, FormatError
from cascadesr.data.degradation import (
    DegradationSpec, FrameSequence, identity_spec, apply_W, apply_W_adjoint, add_awgn,
    grid_motions, random_motions, simulate_sequence, rescale_sequence,
    save_sequence, load_sequence, MANIFEST,
)
from cascadesr.image.ops import convolve_circular, shift_subpixel, decimate
from tests.utils import dense_matrix, textured_image


class TestDegradationSpec(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(ParameterError):
            DegradationSpec(scale=0)
        with self.assertRaises(ParameterError):
            DegradationSpec(noise_variance=-1.0)
        with self.assertRaises(ParameterError):
            DegradationSpec(blur_sigma=-0.5)
        with self.assertRaises(ParameterError):
            DegradationSpec(blur_radius=0)

    def test_blur(self):
        self.assertAlmostEqual(DegradationSpec().blur.sum(), 1.0, delta=1e-12)
        k = DegradationSpec(blur_sigma=0.0, blur_radius=1).blur
        np.testing.assert_array_equal(k, [[0, 0, 0], [0, 1, 0], [0, 0, 0]])
        custom = DegradationSpec(kernel=np.ones((3, 3)))
        np.testing.assert_allclose(custom.blur, np.full((3, 3), 1 / 9.0))


class TestObservation(unittest.TestCase):
    def test_identity(self):
        rng = np.random.default_rng(0)
        z = rng.random((8, 8))
        np.testing.assert_array_equal(apply_W(z, (0, 0), identity_spec()), z)
        np.testing.assert_array_equal(apply_W_adjoint(z, (0, 0), identity_spec()), z)
        c = apply_W(np.full((16, 16), 0.3), (0.7, -1.2), DegradationSpec(scale=4))
        np.testing.assert_allclose(c, np.full((4, 4), 0.3), atol=1e-12)

    def test_dense_operator(self):
        motion = (0.5, -0.25)
        shape = (16, 16)
        for scale in (1, 2, 4):
            spec = DegradationSpec(scale=scale, blur_sigma=1.0, blur_radius=2)
            m = dense_matrix(lambda z: shift_subpixel(z, *motion), shape)
            b = dense_matrix(lambda z: convolve_circular(z, spec.blur), shape)
            d = dense_matrix(lambda z: decimate(z, scale), shape)
            w = dense_matrix(lambda z: apply_W(z, motion, spec), shape)
            np.testing.assert_allclose(w, d @ b @ m, atol=1e-12)
            wt = dense_matrix(lambda g: apply_W_adjoint(g, motion, spec), (16 // scale, 16 // scale))
            np.testing.assert_allclose(wt, w.T, atol=1e-12)

    def test_adjoint_dot(self):
        rng = np.random.default_rng(1)
        for scale in (1, 2, 4):
            spec = DegradationSpec(scale=scale, blur_sigma=1.5, blur_radius=4)
            z, g = rng.random((32, 32)), rng.random((32 // scale, 32 // scale))
            norm = np.linalg.norm(z) * np.linalg.norm(g)
            for motion in [(0, 0), (1.25, 2.5), (-0.3, 3.9)]:
                lhs = float(np.sum(apply_W(z, motion, spec) * g))
                rhs = float(np.sum(z * apply_W_adjoint(g, motion, spec)))
                self.assertLessEqual(abs(lhs - rhs) / norm, 1e-12)


class TestNoise(unittest.TestCase):
    def test_zero_variance(self):
        img = np.full((4, 4), 0.5)
        np.testing.assert_array_equal(add_awgn(img, 0.0, 3), img)

    def test_variance(self):
        img = np.full((256, 256), 0.5)
        out = add_awgn(img, 0.005, 7)
        var = float(np.var(out - img))
        print('sample variance', var)
        self.assertLess(abs(var - 0.005), 0.0005)

    def test_determinism(self):
        img = np.zeros((16, 16))
        np.testing.assert_array_equal(add_awgn(img, 0.01, (1, 2)), add_awgn(img, 0.01, (1, 2)))
        self.assertFalse(np.array_equal(add_awgn(img, 0.01, (1, 2)), add_awgn(img, 0.01, (1, 3))))


class TestSimulate(unittest.TestCase):
    def test_grid_motions(self):
        motions = grid_motions(16, 4)
        self.assertEqual(len(motions), 16)
        self.assertEqual(set(motions), {(float(i), float(j)) for i in range(4) for j in range(4)})
        self.assertEqual(motions[1], (1.0, 0.0))
        self.assertEqual(grid_motions(4, 2), [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])

    def test_random_motions(self):
        motions = random_motions(10, 4, seed=3)
        self.assertEqual(motions, random_motions(10, 4, seed=3))
        self.assertTrue(all(0 <= dx < 4 and 0 <= dy < 4 for dx, dy in motions))

    def test_sequence(self):
        hr = textured_image(64, 64)
        spec = DegradationSpec(scale=4, noise_variance=0.001, seed=5)
        seq = simulate_sequence(hr, spec, 16)
        self.assertEqual(len(seq), 16)
        self.assertEqual(seq.lr_shape, (16, 16))
        self.assertEqual(seq.hr_shape, (64, 64))
        self.assertEqual(seq.reference_index, 8)
        again = simulate_sequence(hr, spec, 16)
        for a, b in zip(seq.frames, again.frames):
            np.testing.assert_array_equal(a, b)
        clean = simulate_sequence(hr, spec.replace(noise_variance=0.0), 16)
        for k, (f, m) in enumerate(zip(clean.frames, clean.motions)):
            np.testing.assert_array_equal(f, apply_W(hr, m, spec))

    def test_identity_sequence(self):
        hr = textured_image(12, 12)
        seq = simulate_sequence(hr, identity_spec(), 1)
        np.testing.assert_array_equal(seq.frames[0], hr)
        self.assertEqual(seq.motions, [(0.0, 0.0)])

    def test_errors(self):
        with self.assertRaises(ParameterError):
            simulate_sequence(np.zeros((10, 10)), DegradationSpec(scale=4), 4)
        with self.assertRaises(ParameterError):
            simulate_sequence(np.zeros((8, 8)), DegradationSpec(scale=4), 0)
        with self.assertRaises(ParameterError):
            simulate_sequence(np.zeros((8, 8)), DegradationSpec(scale=4), 4, shift_mode='spiral')
        with self.assertRaises(ParameterError):
            FrameSequence([np.zeros((4, 4)), np.zeros((4, 5))], [(0, 0), (1, 1)], DegradationSpec())

    def test_rescale(self):
        seq = simulate_sequence(textured_image(32, 32), DegradationSpec(scale=4), 4)
        half = rescale_sequence(seq, 2)
        self.assertEqual(half.spec.scale, 2)
        self.assertAlmostEqual(half.spec.blur_sigma, 0.75)
        self.assertEqual(half.spec.blur_radius, 2)
        self.assertEqual(half.motions, [(dx / 2, dy / 2) for dx, dy in seq.motions])
        self.assertIs(rescale_sequence(seq, 4), seq)


class TestManifest(unittest.TestCase):
    def setUp(self):
        self.tmp_dir = tempfile.TemporaryDirectory()
        self.dir = os.path.join(self.tmp_dir.name, 'seq')

    def tearDown(self):
        self.tmp_dir.cleanup()

    def test_save_load(self):
        spec = DegradationSpec(scale=2, blur_sigma=1.0, blur_radius=2, noise_variance=0.002, seed=9)
        seq = simulate_sequence(textured_image(32, 32), spec, 4, shift_mode='random')
        save_sequence(seq, self.dir)
        self.assertTrue(os.path.isfile(os.path.join(self.dir, MANIFEST)))
        back = load_sequence(self.dir)
        self.assertEqual(back.spec, spec)
        self.assertEqual(back.motions, seq.motions)
        self.assertEqual(back.reference_index, seq.reference_index)
        self.assertFalse(back.is_color)
        for a, b in zip(seq.frames, back.frames):
            self.assertLessEqual(np.abs(np.clip(a, 0, 1) - b).max(), 0.5 / 255 + 1e-9)

    def test_color(self):
        spec = DegradationSpec(scale=2, blur_sigma=1.0, blur_radius=2)
        hr = textured_image(16, 16)
        chroma = (np.full((16, 16), 0.48), np.full((16, 16), 0.52))
        seq = simulate_sequence(hr, spec, 2, chroma=chroma)
        save_sequence(seq, self.dir)
        back = load_sequence(self.dir)
        self.assertTrue(back.is_color)
        np.testing.assert_allclose(back.chroma[0][0], 0.48, atol=0.01)

    def test_bad_manifest(self):
        with self.assertRaises(FileNotFoundError):
            load_sequence(self.dir)
        os.makedirs(self.dir)
        with open(os.path.join(self.dir, MANIFEST), 'w') as f:
            f.write('version = 7\n')
        with self.assertRaises(FormatError):
            load_sequence(self.dir)
        with open(os.path.join(self.dir, MANIFEST), 'w') as f:
            f.write('version = 1\nscale = 2\nblur_sigma = 1.0\nblur_radius = 2\nnoise_variance = 0\n'
                    'seed = 1\ncount = 1\n')
        with self.assertRaisesRegex(FormatError, 'reference_index'):
            load_sequence(self.dir)


if __name__ == '__main__':
    unittest.main()
