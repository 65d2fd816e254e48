import numpy as np
import pytest

from diffdec.channel import bpsk, make_rng
from diffdec.gf2 import Codeword, encode
from diffdec.nn import (Adam, ArchConfig, CheckpointError, DenoiserModel, attention_mask,
                        bce_with_logits_mean, cosine_lr, load_checkpoint, preprocess,
                        save_checkpoint)
from diffdec.nn.tensor import Tensor
from oracles import finite_diff_param_grad

ARCHS = {
    "mlp": ArchConfig("mlp", embed_dim=8, layers=2),
    "masked_attention": ArchConfig("masked_attention", embed_dim=8, layers=2),
}


def _random_case(H, rng):
    y = rng.normal(0, 1, H.n)
    y[y == 0] = 0.1
    feats, e = preprocess(y, H)
    targets = (rng.random(H.n) < 0.5).astype(np.float64)
    return feats, e, targets


class TestPreprocess:
    def test_clean_codeword_maps_to_ones_and_zero_syndrome(self, ham74, ham74_gen):
        cw = encode(ham74_gen, [1, 0, 1, 1])
        feats, e = preprocess(bpsk(cw), ham74)
        assert np.array_equal(feats[:7], np.ones(7))
        assert not feats[7:].any() and e == 0

    def test_invariant_under_codeword_modulation_bit_exact(self, ham74, ham74_gen):
        rng = make_rng(0)
        y = rng.normal(0, 1, 7)
        base, e_base = preprocess(y, ham74)
        for cw in ham74_gen.codebook():
            mod, e_mod = preprocess(y * bpsk(Codeword(cw)), ham74)
            assert np.array_equal(mod, base) and e_mod == e_base

    def test_single_flip_exposes_matching_H_column(self, ham74, ham74_gen):
        cw = encode(ham74_gen, [0, 1, 0, 1])
        y = bpsk(cw).copy()
        y[4] = -y[4]
        feats, e = preprocess(y, ham74)
        assert np.array_equal(feats[7:], ham74.matrix[:, 4].astype(float))
        assert e == int(ham74.matrix[:, 4].sum())


class TestForward:
    @pytest.mark.parametrize("backbone", list(ARCHS))
    def test_deterministic(self, ham74, backbone):
        model = DenoiserModel.create(ham74, ARCHS[backbone], seed=1)
        feats, e, _ = _random_case(ham74, np.random.default_rng(2))
        a = model.forward(feats, e).data
        b = model.forward(feats, e).data
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("backbone", list(ARCHS))
    def test_zero_conditioning_row_blanks_the_features(self, ham74, backbone):
        model = DenoiserModel.create(ham74, ARCHS[backbone], seed=1)
        rng = np.random.default_rng(3)
        e = 1
        model.params["cond.table"].data[e] = 0.0  # test hook: silence the gate
        feats_a, _, _ = _random_case(ham74, rng)
        feats_b, _, _ = _random_case(ham74, rng)
        out_a = model.forward(feats_a, e).data
        out_b = model.forward(feats_b, e).data
        assert np.array_equal(out_a, out_b)  # bias-only output

    @pytest.mark.parametrize("backbone", list(ARCHS))
    def test_conditioning_index_changes_logits(self, ham74, backbone):
        model = DenoiserModel.create(ham74, ARCHS[backbone], seed=4)
        feats, _, _ = _random_case(ham74, np.random.default_rng(5))
        assert not np.array_equal(model.forward(feats, 0).data,
                                  model.forward(feats, 2).data)

    def test_parity_count_range_enforced(self, ham74):
        model = DenoiserModel.create(ham74, ARCHS["mlp"], seed=0)
        feats, _, _ = _random_case(ham74, np.random.default_rng(1))
        with pytest.raises(ValueError):
            model.forward(feats, 4)

    def test_codeword_invariance_of_full_input_bit_exact(self, ham74, ham74_gen):
        model = DenoiserModel.create(ham74, ARCHS["masked_attention"], seed=6)
        rng = make_rng(7)
        y = rng.normal(0, 1, 7)
        feats, e = preprocess(y, ham74)
        base = model.forward(feats, e).data
        for cw in ham74_gen.codebook():
            feats_m, e_m = preprocess(y * bpsk(Codeword(cw)), ham74)
            assert np.array_equal(model.forward(feats_m, e_m).data, base)

    def test_batch_forward_matches_single(self, ham74):
        model = DenoiserModel.create(ham74, ARCHS["masked_attention"], seed=8)
        rng = np.random.default_rng(9)
        feats = rng.normal(0, 1, (5, 10)) ** 2
        es = np.array([0, 1, 2, 3, 1])
        batch = model.forward(feats, es).data
        for i in range(5):
            assert np.allclose(batch[i], model.forward(feats[i], int(es[i])).data,
                               atol=1e-12)


class TestBce:
    def test_zero_logits_cost_ln2(self):
        logits = Tensor(np.zeros(10))
        loss = bce_with_logits_mean(logits, np.zeros(10))
        assert float(loss.data) == pytest.approx(np.log(2), rel=1e-12)

    def test_saturated_correct_logits_vanish(self):
        logits = Tensor(np.array([50.0, -50.0]))
        loss = bce_with_logits_mean(logits, np.array([1.0, 0.0]))
        assert float(loss.data) < 1e-20

    def test_gradient_at_zero_logit_target_one(self):
        n = 7
        logits = Tensor(np.zeros(n), requires_grad=True)
        loss = bce_with_logits_mean(logits, np.ones(n))
        loss.backward()
        assert np.allclose(logits.grad, -0.5 / n, atol=1e-15)


class TestBackward:
    @pytest.mark.parametrize("backbone", list(ARCHS))
    def test_every_parameter_matches_central_differences(self, ham74, backbone):
        model = DenoiserModel.create(ham74, ARCHS[backbone], seed=10)
        feats, e, targets = _random_case(ham74, np.random.default_rng(11))
        model.zero_grad()
        loss = bce_with_logits_mean(model.forward(feats, e), targets)
        loss.backward()
        worst = 0.0
        for name, p in model.params.items():
            grads = p.grad if p.grad is not None else np.zeros_like(p.data)
            for index in np.ndindex(*p.data.shape):
                fd = finite_diff_param_grad(model, feats, e, targets, name, index)
                err = abs(fd - grads[index]) / max(abs(fd), abs(grads[index]), 1e-6)
                worst = max(worst, err)
        assert worst < 1e-4

    def test_unused_parameter_has_no_gradient(self, ham74):
        model = DenoiserModel.create(ham74, ARCHS["mlp"], seed=12)
        feats, e, targets = _random_case(ham74, np.random.default_rng(13))
        model.zero_grad()
        loss = bce_with_logits_mean(model.forward(feats, e), targets)
        loss.backward()
        # conditioning rows other than e are never gathered
        other = [r for r in range(4) if r != e]
        table_grad = model.params["cond.table"].grad
        assert not table_grad[other].any()
        assert table_grad[e].any()

    def test_linear_layer_gradient_is_outer_product(self):
        rng = np.random.default_rng(14)
        w = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        x = rng.normal(size=(1, 4))
        targets = np.array([[1.0, 0.0, 1.0]])
        from diffdec.nn.tensor import matmul
        logits = matmul(Tensor(x), w)
        loss = bce_with_logits_mean(logits, targets)
        loss.backward()
        sig = 1 / (1 + np.exp(-(x @ w.data)))
        expected = np.outer(x[0], (sig - targets)[0] / targets.size)
        assert np.allclose(w.grad, expected, atol=1e-12)

    def test_graph_reuse_raises(self):
        t = Tensor(np.ones(3), requires_grad=True)
        loss = bce_with_logits_mean(t, np.zeros(3))
        loss.backward()
        with pytest.raises(RuntimeError):
            loss.backward()


class TestMaskedAttention:
    def test_mask_structure_follows_the_code(self, ham74):
        mask = attention_mask(ham74.matrix)
        n, m = 7, 3
        h = ham74.matrix.astype(bool)
        # magnitude <-> syndrome exactly at H support
        assert np.array_equal(mask[:n, n:], h.T)
        assert np.array_equal(mask[n:, :n], h)
        # syndrome tokens only self-attend
        assert np.array_equal(mask[n:, n:], np.eye(m, dtype=bool))
        # magnitude pairs share a check
        share = (h.T.astype(int) @ h.astype(int)) > 0
        np.fill_diagonal(share, True)
        assert np.array_equal(mask[:n, :n], share)

    def test_masked_positions_get_exactly_zero_gradient(self, ham74):
        arch = ArchConfig("masked_attention", embed_dim=8, layers=1)
        model = DenoiserModel.create(ham74, arch, seed=15)
        mask = model.mask
        blocked = np.argwhere(~mask)
        rng = np.random.default_rng(16)
        feats = rng.normal(0, 1, 10) ** 2 + 0.1
        from diffdec.nn.tensor import bce_with_logits_mean as bce
        from diffdec.nn.tensor import mul
        checked = 0
        for i, j in blocked:
            if i >= ham74.n or checked >= 8:
                continue  # logits read only the first n tokens
            feats_t = Tensor(feats, requires_grad=True)
            out = model.forward(feats_t, 1)
            probe = np.zeros(ham74.n)
            probe[i] = 1.0
            loss = bce(mul(out, probe), probe)  # depends on logit i alone
            loss.backward()
            assert feats_t.grad is not None
            assert feats_t.grad[i] != 0.0
            assert feats_t.grad[j] == 0.0
            checked += 1
        assert checked == 8


class TestAdam:
    def test_first_step_moves_by_lr(self):
        p = Tensor(np.zeros(5), requires_grad=True)
        p.grad = np.full(5, 3.7)
        opt = Adam({"p": p})
        opt.step(lr=0.01)
        assert np.allclose(np.abs(p.data), 0.01, rtol=1e-6)

    def test_zero_gradient_keeps_parameters(self):
        p = Tensor(np.ones(4), requires_grad=True)
        p.grad = np.zeros(4)
        Adam({"p": p}).step(lr=0.1)
        assert np.array_equal(p.data, np.ones(4))

    def test_seeded_training_is_reproducible(self, rep31):
        from diffdec.diffusion import NoiseSchedule
        from diffdec.training import training_step

        def run():
            model = DenoiserModel.create(rep31, ArchConfig("mlp", 8, 1), seed=21)
            opt = Adam(model.params)
            rng = make_rng(22)
            sched = NoiseSchedule.constant(0.2, 2)
            losses = []
            for _ in range(5):
                losses.append(training_step(model, rep31, sched, 32, rng))
                opt.step(1e-3)
            return losses, model.params["head.weight"].data.copy()

        la, wa = run()
        lb, wb = run()
        assert la == lb
        assert np.array_equal(wa, wb)


class TestCosine:
    def test_endpoints_and_midpoint(self):
        assert cosine_lr(0, 100) == pytest.approx(1e-4)
        assert cosine_lr(100, 100) == pytest.approx(5e-6)
        assert cosine_lr(50, 100) == pytest.approx((1e-4 + 5e-6) / 2)

    def test_bounds_checked(self):
        with pytest.raises(ValueError):
            cosine_lr(5, 4)


class TestCheckpoint:
    @pytest.mark.parametrize("backbone", list(ARCHS))
    def test_roundtrip_reproduces_forward_bit_exactly(self, tmp_path, ham74, backbone):
        model = DenoiserModel.create(ham74, ARCHS[backbone], seed=17)
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path, {"seed": "17", "betas": "0.01,0.01,0.01"})
        loaded = load_checkpoint(path, code=ham74)
        assert loaded.metadata["seed"] == "17"
        rng = np.random.default_rng(18)
        for _ in range(100):
            feats = rng.normal(0, 1, 10) ** 2
            e = int(rng.integers(0, 4))
            assert np.array_equal(model.forward(feats, e).data,
                                  loaded.model.forward(feats, e).data)

    def test_truncated_file_is_rejected(self, tmp_path, ham74):
        model = DenoiserModel.create(ham74, ARCHS["mlp"], seed=19)
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_bitflip_corruption_is_rejected(self, tmp_path, ham74):
        model = DenoiserModel.create(ham74, ARCHS["mlp"], seed=19)
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        raw = bytearray(path.read_bytes())
        raw[60] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_wrong_code_dimensions_rejected(self, tmp_path, ham74):
        from diffdec.gf2 import ParityCheckMatrix
        model = DenoiserModel.create(ham74, ARCHS["mlp"], seed=20)
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        mat = np.zeros((4, 15), dtype=np.uint8)
        mat[:, :11] = np.random.default_rng(0).integers(0, 2, (4, 11))
        mat[:, 11:] = np.eye(4, dtype=np.uint8)
        other = ParityCheckMatrix(np.maximum(mat, 0))
        with pytest.raises(CheckpointError):
            load_checkpoint(path, code=other)
