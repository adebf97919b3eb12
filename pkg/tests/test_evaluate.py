import numpy as np
import pytest

from barseg import evaluate
from barseg.bars import BarGrid


class TestHitRate:
    def test_perfect_match(self):
        est = evaluate.BoundarySet(np.array([0.0, 10.0, 20.0]))
        ref = evaluate.BoundarySet(np.array([0.0, 10.0, 20.0]))
        for tol in (0.5, 3.0):
            res = evaluate.hit_rate(est, ref, tol)
            assert (res.precision, res.recall, res.f_measure) == (1.0, 1.0, 1.0)

    def test_tolerance_sensitivity(self):
        est = evaluate.BoundarySet(np.array([0.0, 10.0, 20.0]))
        ref = evaluate.BoundarySet(np.array([0.0, 10.4, 20.0]))
        res = evaluate.hit_rate(est, ref, 0.5)
        assert res.f_measure == 1.0
        res = evaluate.hit_rate(est, ref, 0.3)
        assert res.n_matched == 2
        assert res.precision == pytest.approx(2 / 3)
        assert res.recall == pytest.approx(2 / 3)
        assert res.f_measure == pytest.approx(2 / 3)

    def test_one_to_one_matching_not_greedy(self):
        # Both estimates are within tolerance of the single reference;
        # only one may claim it.
        est = evaluate.BoundarySet(np.array([10.0, 10.2]))
        ref = evaluate.BoundarySet(np.array([10.1]))
        res = evaluate.hit_rate(est, ref, 0.5)
        assert res.n_matched == 1
        assert res.precision == 0.5
        assert res.recall == 1.0
        assert res.f_measure == pytest.approx(2 / 3)

    def test_matching_trap_requires_maximum_matching(self):
        # Greedy nearest-neighbor would pair est[0] with ref[0] and leave
        # est[1] unmatched; maximum matching pairs both.
        est = [1.0, 1.1]
        ref = [1.05, 0.6]
        res = evaluate.hit_rate(est, ref, 0.5)
        assert res.n_matched == 2

    def test_symmetry_precision_recall_swap(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            est = np.unique(np.round(rng.random(6) * 30, 3))
            ref = np.unique(np.round(rng.random(8) * 30, 3))
            for tol in (0.5, 3.0):
                fwd = evaluate.hit_rate(est, ref, tol)
                rev = evaluate.hit_rate(ref, est, tol)
                assert fwd.precision == pytest.approx(rev.recall)
                assert fwd.recall == pytest.approx(rev.precision)

    def test_monotone_in_tolerance(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            est = np.unique(np.round(rng.random(5) * 20, 3))
            ref = np.unique(np.round(rng.random(5) * 20, 3))
            strict = evaluate.hit_rate(est, ref, 0.5)
            lenient = evaluate.hit_rate(est, ref, 3.0)
            assert lenient.f_measure >= strict.f_measure - 1e-12
            assert lenient.n_matched <= min(len(est), len(ref))

    def test_empty_sets_warn_and_zero(self):
        with pytest.warns(UserWarning):
            res = evaluate.hit_rate(np.array([]), np.array([1.0]), 0.5)
        assert res.f_measure == 0.0

    def test_nonpositive_tolerance_rejected(self):
        with pytest.raises(ValueError):
            evaluate.hit_rate(np.array([1.0]), np.array([1.0]), 0.0)


class TestAlignToDownbeats:
    def test_snap_to_nearest(self):
        grid = BarGrid([0.0, 2.0, 4.0])
        out = evaluate.align_to_downbeats(evaluate.BoundarySet(np.array([1.9])), grid)
        assert np.array_equal(out.times, [2.0])

    def test_exact_times_unchanged(self):
        grid = BarGrid([0.0, 2.0, 4.0])
        annot = evaluate.BoundarySet(np.array([0.0, 2.0, 4.0]))
        out = evaluate.align_to_downbeats(annot, grid)
        assert np.array_equal(out.times, annot.times)

    def test_tie_goes_to_earlier_downbeat(self):
        grid = BarGrid([0.0, 2.0])
        out = evaluate.align_to_downbeats(evaluate.BoundarySet(np.array([1.0])), grid)
        assert np.array_equal(out.times, [0.0])

    def test_duplicates_collapse(self):
        grid = BarGrid([0.0, 10.0])
        annot = evaluate.BoundarySet(np.array([1.0, 2.0, 3.0]))
        out = evaluate.align_to_downbeats(annot, grid)
        assert np.array_equal(out.times, [0.0])

    def test_output_subset_of_grid(self):
        rng = np.random.default_rng(2)
        grid = BarGrid(np.cumsum(rng.random(20) + 0.5))
        annot = evaluate.BoundarySet(np.sort(rng.choice(np.linspace(1, 10, 50), 8, replace=False)))
        out = evaluate.align_to_downbeats(annot, grid)
        assert np.all(np.isin(out.times, grid.downbeats))


class TestLoadAnnotations:
    def test_mirex_style_segments(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("0.0\t10.0\tA\n10.0\t20.0\tB\n")
        out = evaluate.load_annotations(path)
        assert np.array_equal(out.times, [0.0, 10.0, 20.0])

    def test_time_label_form(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("0.0\tintro\n12.5\tverse\n")
        out = evaluate.load_annotations(path)
        assert np.array_equal(out.times, [0.0, 12.5])

    def test_near_duplicates_collapse(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("0.0\t10.0\tA\n10.0000001\t20.0\tB\n")
        out = evaluate.load_annotations(path)
        assert np.array_equal(out.times, [0.0, 10.0, 20.0])

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("")
        with pytest.raises(ValueError):
            evaluate.load_annotations(path)

    def test_unparseable_line_reports_number(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("0.0\t10.0\tA\nnonsense line here no numbers\n")
        with pytest.raises(ValueError, match=":2"):
            evaluate.load_annotations(path)


class TestEvalReport:
    def test_report_dict_shape(self):
        est = np.array([0.0, 5.0, 10.0])
        report = evaluate.evaluate_boundaries(est, est)
        d = report.to_dict()
        assert set(d) == {"0.5", "3"}
        assert d["0.5"]["f_measure"] == 1.0
        assert {"tol", "precision", "recall", "f_measure", "n_est", "n_ref", "n_matched"} <= set(d["3"])
