import pytest

from diffdec.cli import main, read_config_file
from diffdec.nn import load_checkpoint


def run(capsys, *args) -> tuple[int, str]:
    code = main(list(args))
    out = capsys.readouterr().out
    return code, out


class TestDispatch:
    def test_unknown_subcommand_fails(self, capsys):
        assert main(["frobnicate"]) != 0

    def test_unknown_flag_fails(self, capsys):
        assert main(["bench", "--no-such-flag"]) != 0

    def test_missing_checkpoint_is_reported(self, tmp_path, capsys):
        code = main(["bench", "--decoder", "ddecc-ls", "--code", "rep31"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_ml_bench_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "ber.csv"
        code = main(["bench", "--code", "rep31", "--decoder", "ml",
                     "--ebn0", "4,6", "--seed", "7", "--min-words", "2000",
                     "--min-error-frames", "10", "--max-words", "4000",
                     "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert "decoder,ebn0_db" in text
        assert text.count("\nml,") == 2

    def test_rerun_from_embedded_config_is_byte_identical(self, tmp_path, capsys):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        base = ["bench", "--code", "rep31", "--decoder", "ml", "--ebn0", "5",
                "--seed", "3", "--min-words", "2000", "--min-error-frames", "5",
                "--max-words", "4000"]
        assert main(base + ["--out", str(out1)]) == 0
        # the artifact itself serves as the config file
        assert main(["bench", "--config", str(out1), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_model_decoder_and_bp_through_the_cli(self, tmp_path, capsys):
        ckpt = tmp_path / "m.ckpt"
        assert main(["train", "--code", "rep31", "--epochs", "2",
                     "--batches-per-epoch", "20", "--beta", "0.3",
                     "--embed-dim", "8", "--layers", "1", "--seed", "2",
                     "--out", str(ckpt), "--report", str(tmp_path / "r.csv")]) == 0
        out = tmp_path / "dd.csv"
        assert main(["bench", "--code", "rep31", "--decoder", "ddecc-ls",
                     "--checkpoint", str(ckpt), "--ebn0", "4", "--seed", "1",
                     "--min-words", "1000", "--min-error-frames", "5",
                     "--max-words", "2000", "--out", str(out)]) == 0
        assert "\nddecc-ls," in out.read_text()
        out_bp = tmp_path / "bp.csv"
        assert main(["bench", "--code", "hamming74", "--decoder", "bp",
                     "--ebn0", "2", "--seed", "1", "--min-words", "1000",
                     "--min-error-frames", "5", "--max-words", "2000",
                     "--bp-iters", "5", "--out", str(out_bp)]) == 0
        assert "\nbp," in out_bp.read_text()

    def test_cli_flag_overrides_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("command = bench\ncode = rep31\ndecoder = ml\nebn0 = 5\n"
                       "seed = 3\nmin_words = 1000\nmin_error_frames = 5\n"
                       "max_words = 2000\n")
        out = tmp_path / "c.csv"
        assert main(["bench", "--config", str(cfg), "--seed", "4",
                     "--out", str(out)]) == 0
        assert "# seed = 4" in out.read_text()


class TestTrainCli:
    def test_zero_epochs_writes_loadable_checkpoint(self, tmp_path, capsys):
        ckpt = tmp_path / "m.ckpt"
        report = tmp_path / "r.csv"
        code = main(["train", "--code", "rep31", "--epochs", "0",
                     "--embed-dim", "8", "--layers", "1",
                     "--out", str(ckpt), "--report", str(report)])
        assert code == 0
        loaded = load_checkpoint(ckpt)
        assert loaded.model.n == 3 and loaded.model.k == 1
        assert loaded.metadata["epochs"] == "0"
        assert "epoch,mean_loss" in report.read_text()

    def test_training_run_is_reproducible(self, tmp_path, capsys):
        args = ["train", "--code", "rep31", "--epochs", "2",
                "--batches-per-epoch", "5", "--batch-size", "16",
                "--embed-dim", "8", "--layers", "1", "--seed", "5",
                "--beta", "0.3"]
        a_ckpt, a_rep = tmp_path / "a.ckpt", tmp_path / "a.csv"
        b_ckpt, b_rep = tmp_path / "b.ckpt", tmp_path / "b.csv"
        assert main(args + ["--out", str(a_ckpt), "--report", str(a_rep)]) == 0
        # rerun from the report artifact as config
        assert main(["train", "--config", str(a_rep),
                     "--out", str(b_ckpt), "--report", str(b_rep)]) == 0
        assert a_ckpt.read_bytes() == b_ckpt.read_bytes()
        assert a_rep.read_bytes() == b_rep.read_bytes()


class TestDecodeCli:
    @pytest.fixture
    def rep31_ckpt(self, tmp_path):
        path = tmp_path / "rep31.ckpt"
        assert main(["train", "--code", "rep31", "--epochs", "4",
                     "--batches-per-epoch", "50", "--beta", "0.3",
                     "--lr0", "1e-3", "--embed-dim", "16", "--layers", "2",
                     "--seed", "5", "--out", str(path),
                     "--report", str(tmp_path / "rep31_loss.csv")]) == 0
        return path

    def test_decode_words_from_file(self, tmp_path, capsys, rep31_ckpt):
        words = tmp_path / "words.txt"
        words.write_text("1.0 1.0 1.0\n-0.9 0.2 -1.1\n")
        out = tmp_path / "dec.csv"
        code = main(["decode", "--code", "rep31", "--checkpoint", str(rep31_ckpt),
                     "--in", str(words), "--out", str(out)])
        assert code == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        results = [l for l in lines if ",result," in l]
        assert len(results) == 2
        assert results[0].split(",")[6] == "000"  # clean word decodes instantly

    def test_word_length_mismatch_reported(self, tmp_path, capsys, rep31_ckpt):
        words = tmp_path / "short.txt"
        words.write_text("1.0 1.0\n")
        assert main(["decode", "--code", "rep31", "--checkpoint", str(rep31_ckpt),
                     "--in", str(words)]) == 1

    def test_checkpoint_code_mismatch_reported(self, tmp_path, capsys, rep31_ckpt):
        words = tmp_path / "w.txt"
        words.write_text("1 1 1 1 1 1 1\n")
        assert main(["decode", "--code", "hamming74", "--checkpoint",
                     str(rep31_ckpt), "--in", str(words)]) == 1


class TestOracleCli:
    def test_ml_decisions(self, tmp_path, capsys):
        words = tmp_path / "w.txt"
        words.write_text("0.9 -0.2 0.3\n-0.9 -0.1 -0.2\n")
        rc, out = run(capsys, "oracle", "--code", "rep31", "--in", str(words))
        assert rc == 0
        rows = [l for l in out.splitlines() if not l.startswith("#")][1:]
        assert rows == ["0,000", "1,111"]


class TestStudyCli:
    def test_parity_noise(self, tmp_path, capsys):
        out = tmp_path / "pn.csv"
        assert main(["study", "--kind", "parity-noise", "--code", "hamming74",
                     "--sigmas", "0,0.5,1.0", "--samples", "500",
                     "--out", str(out)]) == 0
        body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert body[0] == "sigma,mean_parity_errors,std_parity_errors"
        assert len(body) == 4

    def test_forward_trace(self, tmp_path, capsys):
        out = tmp_path / "ft.csv"
        assert main(["study", "--kind", "forward-trace", "--beta", "0.05",
                     "--steps", "6", "--trajectories", "3",
                     "--out", str(out)]) == 0
        body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(body) == 1 + 3 * 7

    def test_lambda_hist_requires_checkpoint(self, capsys):
        assert main(["study", "--kind", "lambda-hist", "--code", "rep31"]) == 1


class TestConfigParsing:
    def test_reads_hash_prefixed_and_plain_lines(self, tmp_path):
        cfg = tmp_path / "x.cfg"
        cfg.write_text("# seed = 9\nebn0 = 4,5\nnot a config line\na,b,c\n")
        values = read_config_file(str(cfg))
        assert values == {"seed": "9", "ebn0": "4,5"}
