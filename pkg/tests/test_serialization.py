import json
import os
import tempfile
import unittest

from bootstrap import add_src_path

add_src_path()

from nrlight.models import Direction, SweepResult, SweepRow
from nrlight.serialization import CSV_COLUMNS, render_plot_script, save_result, write_result


def _row(**changes) -> SweepRow:
    base = dict(scenario="s", direction=Direction.FORWARD, axis1=0.5, branch=0, I1=1e-5, T=0.36, stable=True, verdict="selected")
    base.update(changes)
    return SweepRow(**base)


class TestWriteResult(unittest.TestCase):
    def test_empty_result_is_header_only(self) -> None:
        payload = write_result(SweepResult())
        self.assertEqual(payload, (",".join(CSV_COLUMNS) + "\n").encode("utf-8"))

    def test_csv_cells(self) -> None:
        payload = write_result(SweepResult(rows=[_row()])).decode("utf-8")
        header, line = payload.splitlines()
        cells = dict(zip(header.split(","), line.split(",")))
        self.assertEqual(cells["T"], "0.36")
        self.assertEqual(cells["I1"], "1e-05")
        self.assertEqual(cells["direction"], "forward")
        self.assertEqual(cells["stable"], "true")
        self.assertEqual(cells["axis2"], "")
        self.assertEqual(cells["isolation_db"], "")

    def test_rows_keep_their_order(self) -> None:
        rows = [_row(branch=2), _row(branch=0, direction=Direction.BACKWARD)]
        lines = write_result(SweepResult(rows=rows)).decode("utf-8").splitlines()[1:]
        self.assertEqual([line.split(",")[4] for line in lines], ["2", "0"])

    def test_json_is_sorted_and_stable(self) -> None:
        result = SweepResult(rows=[_row()], metadata={"b": 1, "a": 2})
        payload = write_result(result, "json")
        self.assertEqual(payload, write_result(SweepResult.model_validate(json.loads(payload)), "json"))
        self.assertLess(payload.index(b'"metadata"'), payload.index(b'"rows"'))

    def test_unknown_format(self) -> None:
        with self.assertRaises(ValueError):
            write_result(SweepResult(), "xml")


class TestSaveResult(unittest.TestCase):
    def test_format_follows_extension(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_result(SweepResult(rows=[_row()]), os.path.join(tmpdir, "out", "fig.json"))
            with open(path, "r", encoding="utf-8") as handle:
                self.assertEqual(json.load(handle)["rows"][0]["T"], 0.36)

    def test_plot_script_points_at_data(self) -> None:
        result = SweepResult(metadata={"scenario": "fig7", "sweep": {"axis1": {"axis": "eps_p_sq"}}})
        script = render_plot_script(result, "/data/fig7.csv")
        self.assertIn("'/data/fig7.csv'", script)
        self.assertIn("'/data/fig7.png'", script)
        self.assertIn("ax.set_xlabel('eps_p_sq')", script)
        compile(script, "plot.py", "exec")

    def test_plot_script_rejects_unknown_column(self) -> None:
        with self.assertRaises(ValueError):
            render_plot_script(SweepResult(), "x.csv", quantity="phase")


if __name__ == "__main__":
    unittest.main()
