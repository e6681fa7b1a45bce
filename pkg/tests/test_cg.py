import unittest
import numpy as np

from cascadesr.errors import SolverError, ParameterError, NumericError
from cascadesr.solver.cg import conjugate_gradient, jacobi


def spd_matrix(n, seed=0):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, n))
    return q @ q.T + n * np.eye(n)


class TestConjugateGradient(unittest.TestCase):
    def setUp(self):
        self.a = spd_matrix(20)
        self.b = np.random.default_rng(1).standard_normal(20)

    def test_dense_solve(self):
        result = conjugate_gradient(lambda x: self.a @ x, self.b, max_iters=100, tol=1e-14)
        np.testing.assert_allclose(result.x, np.linalg.solve(self.a, self.b), atol=1e-8)
        self.assertLessEqual(result.iterations, 100)

    def test_preconditioned(self):
        diag = np.diag(self.a)
        result = conjugate_gradient(lambda x: self.a @ x, self.b, precond=jacobi(diag),
                                    max_iters=100, tol=1e-12)
        self.assertTrue(result.converged)
        np.testing.assert_allclose(result.x, np.linalg.solve(self.a, self.b), atol=1e-8)

    def test_energy_decreases(self):
        result = conjugate_gradient(lambda x: self.a @ x, self.b, max_iters=15, tol=1e-14)
        self.assertEqual(len(result.energies), result.iterations + 1)
        self.assertEqual(len(result.residuals), result.iterations + 1)
        for prev, cur in zip(result.energies, result.energies[1:]):
            self.assertLessEqual(cur, prev + 1e-12)
        x = result.x
        self.assertAlmostEqual(result.energies[result.best_iteration], 0.5 * x @ self.a @ x - self.b @ x,
                               delta=1e-8)

    def test_minimum_residual_iterate(self):
        # without preconditioning the residual of a CG iterate is not monotone
        a = np.diag(np.geomspace(1.0, 1e4, 30))
        b = np.ones(30)
        result = conjugate_gradient(lambda x: a @ x, b, max_iters=12, tol=1e-14)
        self.assertFalse(result.converged)
        for prev, cur in zip(result.residuals, result.residuals[1:]):
            self.assertLessEqual(cur, prev)
        x = result.x
        true_residual = np.linalg.norm(b - a @ x) / np.linalg.norm(b)
        self.assertAlmostEqual(true_residual, result.residuals[-1], delta=1e-10)
        self.assertLessEqual(result.best_iteration, result.iterations)

    def test_warm_start(self):
        exact = np.linalg.solve(self.a, self.b)
        result = conjugate_gradient(lambda x: self.a @ x, self.b, x0=exact, tol=1e-8)
        self.assertEqual(result.iterations, 0)
        self.assertTrue(result.converged)

    def test_zero_rhs(self):
        result = conjugate_gradient(lambda x: self.a @ x, np.zeros(20), x0=np.ones(20))
        np.testing.assert_array_equal(result.x, 0)
        self.assertTrue(result.converged)

    def test_arrays(self):
        a = spd_matrix(16, seed=2)
        b = np.random.default_rng(3).standard_normal((4, 4))
        result = conjugate_gradient(lambda x: (a @ x.ravel()).reshape(4, 4), b, max_iters=100, tol=1e-14)
        np.testing.assert_allclose(result.x.ravel(), np.linalg.solve(a, b.ravel()), atol=1e-8)

    def test_errors(self):
        with self.assertRaises(SolverError):
            conjugate_gradient(lambda x: -x, self.b)
        with self.assertRaises(SolverError):
            conjugate_gradient(lambda x: np.zeros_like(x), self.b)
        with self.assertRaises(SolverError):
            jacobi(np.array([1.0, 0.0]))
        with self.assertRaises(ParameterError):
            conjugate_gradient(lambda x: x, self.b, max_iters=0)
        bad = self.b.copy()
        bad[0] = np.inf
        with self.assertRaises(NumericError):
            conjugate_gradient(lambda x: x, bad)


if __name__ == '__main__':
    unittest.main()
