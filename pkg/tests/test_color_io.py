import os
import tempfile
import unittest
import numpy as np

from cascadesr.errors import FormatError, ParameterError
from cascadesr.image.color import rgb_to_ycbcr, ycbcr_to_rgb, luminance
from cascadesr.image.io import read_image, write_image, list_images, to_uint8


class TestColor(unittest.TestCase):
    def test_gray_has_centred_chroma(self):
        g = np.linspace(0, 1, 16).reshape(4, 4)
        y, cb, cr = rgb_to_ycbcr((g, g, g))
        np.testing.assert_allclose(y, g, atol=1e-12)
        np.testing.assert_allclose(cb, 0.5, atol=1e-12)
        np.testing.assert_allclose(cr, 0.5, atol=1e-12)

    def test_pure_red(self):
        one, zero = np.ones((2, 2)), np.zeros((2, 2))
        y, cb, cr = rgb_to_ycbcr((one, zero, zero))
        np.testing.assert_allclose(y, 0.299, atol=1e-12)
        np.testing.assert_allclose(cr, 1.0, atol=1e-12)

    def test_inverse(self):
        rng = np.random.default_rng(0)
        rgb = tuple(rng.random((5, 6)) for _ in range(3))
        back = ycbcr_to_rgb(rgb_to_ycbcr(rgb))
        for a, b in zip(rgb, back):
            np.testing.assert_allclose(a, b, atol=1e-10)

    def test_luminance(self):
        rng = np.random.default_rng(1)
        img = rng.random((4, 4, 3))
        expected = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
        np.testing.assert_allclose(luminance(img), expected, atol=1e-12)
        np.testing.assert_array_equal(luminance(img[..., 0]), img[..., 0])

    def test_bad_planes(self):
        with self.assertRaises(ParameterError):
            rgb_to_ycbcr((np.zeros((2, 2)), np.zeros((2, 2))))
        with self.assertRaises(ParameterError):
            rgb_to_ycbcr((np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((3, 2))))


class TestImageIO(unittest.TestCase):
    def setUp(self):
        self.tmp_dir = tempfile.TemporaryDirectory()
        self.dir = self.tmp_dir.name

    def tearDown(self):
        self.tmp_dir.cleanup()

    def test_gray_png(self):
        img = np.arange(64, dtype=np.float64).reshape(8, 8) / 63.0
        path = write_image(os.path.join(self.dir, 'a.png'), img)
        back = read_image(path)
        self.assertEqual(back.shape, (8, 8))
        self.assertLessEqual(np.abs(back - img).max(), 0.5 / 255 + 1e-12)
        np.testing.assert_array_equal(to_uint8(back), to_uint8(img))

    def test_rgb_pgm_ppm(self):
        rng = np.random.default_rng(2)
        rgb = rng.random((6, 5, 3))
        back = read_image(write_image(os.path.join(self.dir, 'c.ppm'), rgb))
        self.assertEqual(back.shape, (6, 5, 3))
        np.testing.assert_array_equal(to_uint8(back), to_uint8(rgb))
        gray = rng.random((6, 5))
        back = read_image(write_image(os.path.join(self.dir, 'g.pgm'), gray))
        np.testing.assert_array_equal(to_uint8(back), to_uint8(gray))

    def test_clipping(self):
        img = np.array([[-0.5, 0.5], [1.5, 1.0]])
        np.testing.assert_array_equal(to_uint8(img), [[0, 128], [255, 255]])

    def test_errors(self):
        with self.assertRaises(FileNotFoundError):
            read_image(os.path.join(self.dir, 'missing.png'))
        with self.assertRaises(FormatError):
            write_image(os.path.join(self.dir, 'a.bmp'), np.zeros((2, 2)))
        bad = os.path.join(self.dir, 'bad.png')
        with open(bad, 'wb') as f:
            f.write(b'not an image')
        with self.assertRaises(FormatError):
            read_image(bad)

    def test_list_images(self):
        for name in ('b.png', 'a.pgm', 'notes.txt'):
            with open(os.path.join(self.dir, name), 'wb'):
                pass
        files = list_images(self.dir)
        self.assertEqual([os.path.basename(f) for f in files], ['a.pgm', 'b.png'])
        self.assertEqual(list_images('x.png,y.png'), ['x.png', 'y.png'])


if __name__ == '__main__':
    unittest.main()
