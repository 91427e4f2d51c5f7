import io
import contextlib

import pytest

from toucher_isolator.cli import main


def run_cli(*argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main(list(argv))
    return code, out.getvalue()


class TestSolve:
    def test_inline_path(self):
        code, out = run_cli("solve", "--tree", "8; 0-1,1-2,2-3,3-4,4-5,5-6,6-7")
        assert code == 0
        assert out.splitlines()[0] == "u = 2"
        assert out.splitlines()[1].startswith("principal: T:")

    def test_from_file(self, tmp_path):
        f = tmp_path / "tree.txt"
        f.write_text("4; 0-1,0-2,0-3\n")
        code, out = run_cli("solve", "--tree", str(f))
        assert code == 0 and "u = 1" in out

    def test_bad_tree(self, capsys):
        code, _ = run_cli("solve", "--tree", "4; 0-1,2-3")
        assert code == 1

    def test_limit(self):
        code, _ = run_cli("solve", "--tree", "8; 0-1,1-2,2-3,3-4,4-5,5-6,6-7",
                          "--limit", "3")
        assert code == 1


class TestVerify:
    def test_small_sweep(self, tmp_path):
        out_csv = tmp_path / "report.csv"
        code, out = run_cli("verify", "--n-max", "6", "--out", str(out_csv))
        assert code == 0
        assert f"{1 + 2 + 3 + 6}/{1 + 2 + 3 + 6} rows passed" in out
        assert out_csv.read_text().startswith("suite,name,n,")

    def test_families(self):
        code, out = run_cli("families", "--n-max", "6", "--envelope-n-max", "4")
        assert code == 0 and "rows passed" in out

    def test_lemma4(self):
        code, out = run_cli("lemma4", "--n-max", "6", "--samples", "10",
                            "--seed", "3")
        assert code == 0 and "10/10 rows passed" in out


class TestEnumerate:
    def test_stream(self):
        code, out = run_cli("enumerate", "--n", "4")
        assert code == 0
        assert out.splitlines() == ["4; 0-1,0-2,0-3", "4; 0-1,1-2,0-3"]

    def test_bound(self):
        code, _ = run_cli("enumerate", "--n", "40")
        assert code == 1


class TestReduce:
    def test_chain_is_printed(self):
        code, out = run_cli(
            "reduce", "--position", "6; 0-1,1-2,2-3,3-4,4-5; C:{0} D:{} X:{0,5} s:I")
        assert code == 0
        assert "score bound:" in out
        assert "L4C3" in out
        assert "ledger:" in out

    def test_terminal_case_free(self):
        code, out = run_cli(
            "reduce", "--position",
            "8; 0-3,0-1,0-2,3-4,4-5,5-6,5-7; C:{3} D:{} X:{1,2,6,7} s:I")
        assert code == 0
        assert "no case applies" in out
        assert "certified: True" in out

    def test_episode_case_reported(self):
        code, out = run_cli(
            "reduce", "--position", "6; 0-1,1-2,2-3,3-4,4-5; C:{} D:{} X:{0,5} s:I")
        assert code == 0
        assert "dispatch: L4C5" in out

    def test_rejects_non_leaf_exclusion(self):
        code, _ = run_cli("reduce", "--position",
                          "4; 0-1,1-2,2-3; C:{} D:{} X:{} s:I")
        assert code == 1


class TestPlay:
    def test_scripted_star_game(self, tmp_path):
        tree = tmp_path / "star6.txt"
        tree.write_text("6; 0-1,0-2,0-3,0-4,0-5\n")
        script = tmp_path / "moves.txt"
        script.write_text("0-1\n0-3\n0-5\n")
        code, out = run_cli("play", "--tree", str(tree), "--as", "toucher",
                            "--opponent", "strategy", "--script", str(script))
        assert code == 0
        assert out.strip().endswith("final isolated = 2")

    def test_script_replay_is_byte_identical(self, tmp_path):
        tree = tmp_path / "p7.txt"
        tree.write_text("7; 0-1,1-2,2-3,3-4,4-5,5-6\n")
        script = tmp_path / "moves.txt"
        script.write_text("0-1\n1-2\n2-3\n")
        runs = [run_cli("play", "--tree", str(tree), "--as", "toucher",
                        "--opponent", "strategy", "--script", str(script))
                for _ in range(2)]
        assert runs[0] == runs[1]
        assert runs[0][0] == 0

    def test_optimal_opponent(self, tmp_path):
        tree = tmp_path / "p4.txt"
        tree.write_text("4; 0-1,1-2,2-3\n")
        script = tmp_path / "moves.txt"
        script.write_text("1-2\n2-3\n")
        code, out = run_cli("play", "--tree", str(tree), "--as", "toucher",
                            "--opponent", "optimal", "--script", str(script))
        assert code == 0
        assert out.strip().endswith("final isolated = 1")

    def test_strategy_cannot_play_toucher(self, tmp_path):
        tree = tmp_path / "p4.txt"
        tree.write_text("4; 0-1,1-2,2-3\n")
        code, _ = run_cli("play", "--tree", str(tree), "--as", "isolator",
                          "--opponent", "strategy")
        assert code == 1
