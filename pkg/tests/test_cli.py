import os
import unittest
import tempfile

from cascadesr.cli import dispatch
from cascadesr.data.degradation import load_sequence
from cascadesr.image.io import read_image, write_image
from cascadesr.model.weights import save_weights, load_weights
from tests.utils import textured_image, tiny_model


class TestCLI(unittest.TestCase):
    def setUp(self):
        self.tmp_dir = tempfile.TemporaryDirectory()
        self.d = self.tmp_dir.name
        self.hr = write_image(self.path('hr.png'), textured_image(32, 32, seed=6))

    def tearDown(self):
        self.tmp_dir.cleanup()

    def path(self, name):
        return os.path.join(self.d, name)

    def run_ok(self, argline):
        print('argline:', argline)
        self.assertEqual(dispatch(argline.split()), 0, argline)

    def degrade(self, scale):
        seq = self.path(f'seq{scale}')
        self.run_ok(f'degrade --in {self.hr} --frames 4 --scale {scale} --sigma 1.0 --radius 2 '
                    f'--noise 0.001 --seed 3 --out {seq}')
        return seq

    def test_usage_errors(self):
        self.assertEqual(dispatch([]), 2)
        self.assertEqual(dispatch(['upscale']), 2)
        self.assertEqual(dispatch(['sr', '--method', 'lorig']), 2)
        self.assertEqual(dispatch(['sr', '--method', 'nearest', '--seq', 'x', '--out', 'y.png']), 2)

    def test_runtime_errors(self):
        seq = self.degrade(2)
        self.assertEqual(dispatch(['sr', '--method', 'erbpn', '--seq', seq, '--out', self.path('a.png')]), 1)
        self.assertEqual(dispatch(['evaluate', '--ref', self.path('missing.png'), '--test', self.hr]), 1)
        self.assertEqual(dispatch(['sr', '--method', 'bicubic', '--seq', self.path('nothing'),
                                   '--out', self.path('a.png')]), 1)

    def test_degrade_sr_evaluate(self):
        seq = self.degrade(2)
        loaded = load_sequence(seq)
        self.assertEqual(len(loaded), 4)
        self.assertEqual(loaded.lr_shape, (16, 16))
        self.assertEqual(loaded.spec.seed, 3)

        self.run_ok(f'sr --method bicubic --seq {seq} --out {self.path("bicubic.png")}')
        diag = self.path('diag.csv')
        self.run_ok(f'sr --method lorig --seq {seq} --max-outer 2 --diagnostics {diag} '
                    f'--out {self.path("lorig.png")}')
        self.assertEqual(read_image(self.path('lorig.png')).shape, (32, 32))
        with open(diag) as f:
            self.assertEqual(len(f.read().splitlines()), 3)

        report = self.path('report.csv')
        self.run_ok(f'evaluate --ref {self.hr} --test {self.path("lorig.png")} --method lorig '
                    f'--scale 2 --crop 2 --out {report}')
        with open(report) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[-2], 'image,method,scale,noise_variance,psnr_db,ssim')
        row = lines[-1].split(',')
        self.assertEqual(row[:4], ['lorig', 'lorig', '2', '0'])
        self.assertGreater(float(row[4]), 15.0)

    def test_register(self):
        seq = self.degrade(2)
        out = self.path('registered')
        self.run_ok(f'register --seq {seq} --out {out}')
        loaded = load_sequence(out)
        self.assertEqual(loaded.motions[loaded.reference_index], (0.0, 0.0))

    def test_network_commands(self):
        model = save_weights(tiny_model(scale=2, seed=1), self.path('x2.erbpn'))
        seq = self.degrade(4)
        self.run_ok(f'cascade --seq {seq} --order mfsf --model {model} --max-outer 1 '
                    f'--out {self.path("mfsf.png")}')
        self.run_ok(f'cascade --seq {seq} --order sfmf --model {model} --max-outer 1 '
                    f'--out {self.path("sfmf.png")}')
        self.assertEqual(read_image(self.path('sfmf.png')).shape, (32, 32))
        self.assertEqual(dispatch(['cascade', '--seq', seq, '--stage2-scale', '4', '--model', model,
                                   '--out', self.path('bad.png')]), 1)
        self.run_ok(f'sr --method erbpn --seq {self.degrade(2)} --model {model} --out {self.path("net.png")}')

    def test_cascade_plan(self):
        save_weights(tiny_model(scale=2, seed=1), self.path('x2.erbpn'))
        with open(self.path('solver.cfg'), 'w') as f:
            f.write('max_outer = 1\ncg_max_iters = 5\n')
        plan = self.path('plan.cfg')
        with open(plan, 'w') as f:
            f.write('order = sfmf\nstage1_scale = 4\nstage2_scale = 1\n'
                    'solver_config = solver.cfg\nmodel = x2.erbpn\n')
        seq = self.degrade(4)
        # the x2 network does not fit the x4 first stage of the file
        self.assertEqual(dispatch(['cascade', '--seq', seq, '--plan', plan, '--out', self.path('a.png')]), 1)
        self.run_ok(f'cascade --seq {seq} --plan {plan} --stage1-scale 2 --stage2-scale 2 '
                    f'--out {self.path("sfmf.png")}')
        self.assertEqual(read_image(self.path('sfmf.png')).shape, (32, 32))
        self.run_ok(f'cascade --seq {seq} --plan {plan} --order mfsf --stage1-scale 2 --stage2-scale 2 '
                    f'--out {self.path("mfsf.png")}')
        self.assertEqual(dispatch(['cascade', '--seq', seq, '--out', self.path('b.png')]), 1)

    def test_bench_noise_sweep(self):
        with open(self.path('suite.cfg'), 'w') as f:
            f.write('images = hr.png\nmethods = lorig\nframes = 4\nsolver_config = solver.cfg\n')
        with open(self.path('solver.cfg'), 'w') as f:
            f.write('max_outer = 1\ncg_max_iters = 5\n')
        out = self.path('bench.csv')
        self.run_ok(f'bench --suite {self.path("suite.cfg")} --noise-sweep true --out {out}')
        with open(out) as f:
            rows = [line.split(',') for line in f.read().splitlines() if not line.startswith('#')][1:]
        self.assertEqual(len(rows), 2 * 6)
        self.assertEqual(sorted({float(r[3]) for r in rows}), [0.0, 0.001, 0.002, 0.003, 0.004, 0.005])

    def test_train(self):
        images = self.path('train')
        os.makedirs(images)
        write_image(os.path.join(images, 'a.png'), textured_image(32, 32, seed=8))
        out = self.path('w.erbpn')
        self.run_ok(f'train --images {images} --out {out} --exp-dir {self.path("exp")} --epochs 1 '
                    f'--n-f 4 --n-0 4 --units 2 --patch-size 8 --patches-per-image 2 --batch-size 2 --threads 2')
        model = load_weights(out)
        self.assertEqual(model.scale, 2)
        self.assertEqual(model.metadata['training_mode'], 'degradation')
        self.assertTrue(os.path.isfile(self.path('exp/loss_curve.csv')))

    def test_gridsearch(self):
        seq = self.degrade(2)
        out = self.path('grid.csv')
        self.run_ok(f'gridsearch-lambda --seq {seq} --ref {self.hr} --max-outer 1 --cg-max-iters 5 --out {out}')
        with open(out) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], 'lambda,psnr_db')
        self.assertEqual(len(lines), 14)


if __name__ == '__main__':
    unittest.main()
