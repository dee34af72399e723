#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fec/autodiff.hpp"

using namespace fec;

namespace {

Parameter<double> random_param(const std::string& name, std::vector<int> shape, Rng& rng,
                               double scale = 0.8) {
    Parameter<double> p(name, std::move(shape));
    for (auto& v : p.value) v = scale * rng.gaussian();
    return p;
}

std::vector<double> random_vec(size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.gaussian();
    return v;
}

} // namespace

TEST_CASE("affine identity and bias gradient") {
    Tape<double> tape;
    Parameter<double> w("w", {3, 3});
    for (int i = 0; i < 3; ++i) w.value[4 * i] = 1.0; // identity
    Parameter<double> b("b", {3});
    std::vector<double> x = {1.0, -2.0, 3.0, 0.5, 0.0, -1.0};
    Var y = tape.affine(tape.leaf(2, 3, x), tape.param(w), tape.param(b));
    CHECK(tape.value(y) == x);

    Var s = tape.sum(y);
    tape.backward(s);
    for (double g : b.grad) CHECK(g == 2.0); // sum over the two rows
}

TEST_CASE("affine gradient matches finite differences") {
    Rng rng(1);
    Parameter<double> w = random_param("w", {5, 3}, rng);
    Parameter<double> b = random_param("b", {5}, rng);
    Parameter<double> x = random_param("x", {4, 3}, rng);
    std::vector<Parameter<double>*> params = {&w, &b, &x};
    auto loss = [&](bool with_grad) {
        Tape<double> tape;
        Var y = tape.affine(tape.param(x), tape.param(w), tape.param(b));
        // square so the loss is nonlinear in the output
        Var l = tape.sum(tape.mul(y, y));
        if (with_grad) tape.backward(l);
        return tape.value(l)[0];
    };
    Rng probe(2);
    auto r = grad_check<double>(params, loss, 20, probe);
    CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("pointwise and structural op gradients") {
    Rng rng(3);
    Parameter<double> a = random_param("a", {4, 6}, rng);
    Parameter<double> b = random_param("b", {4, 6}, rng);
    std::vector<Parameter<double>*> params = {&a, &b};

    auto check_fn = [&](const char* name, auto build) {
        auto loss = [&](bool with_grad) {
            Tape<double> tape;
            Var l = build(tape);
            if (with_grad) tape.backward(l);
            return tape.value(l)[0];
        };
        Rng probe(11);
        auto r = grad_check<double>(params, loss, 24, probe);
        INFO(name);
        CHECK(r.max_rel_error < 1e-6);
    };

    check_fn("sigmoid", [&](Tape<double>& t) {
        return t.sum(t.sigmoid(t.mul(t.param(a), t.param(b))));
    });
    check_fn("tanh", [&](Tape<double>& t) { return t.sum(t.tanh_op(t.add(t.param(a), t.param(b)))); });
    check_fn("sub+mul", [&](Tape<double>& t) {
        Var d = t.sub(t.param(a), t.param(b));
        return t.sum(t.mul(d, d));
    });
    check_fn("concat+slice", [&](Tape<double>& t) {
        Var c = t.concat_cols(t.param(a), t.param(b));
        Var left = t.slice_cols(c, 2, 6);
        return t.sum(t.mul(left, left));
    });
    check_fn("row_block+concat_rows", [&](Tape<double>& t) {
        Var top = t.row_block(t.param(a), 0, 2);
        Var bottom = t.row_block(t.param(a), 2, 2);
        Var swapped = t.concat_rows({bottom, top});
        return t.sum(t.mul(swapped, t.param(b)));
    });
    check_fn("permute_row_blocks", [&](Tape<double>& t) {
        Var p = t.permute_row_blocks(t.param(a), {2, 0, 3, 1}, 1);
        return t.sum(t.mul(p, t.param(b)));
    });
    check_fn("bce", [&](Tape<double>& t) {
        Var logits = t.row_block(t.param(a), 0, 4); // reuse as logits
        std::vector<double> targets(24, 0.0);
        for (size_t i = 0; i < targets.size(); i += 3) targets[i] = 1.0;
        return t.bce_with_logits(logits, targets);
    });
}

TEST_CASE("batchnorm statistics and gradients") {
    Rng rng(5);
    const int R = 64, C = 5;
    BatchNormState<double> bn("bn", C);

    // training mode output is standardized per feature
    Tape<double> tape;
    Parameter<double> x = random_param("x", {R, C}, rng, 2.0);
    for (size_t i = 0; i < x.value.size(); ++i) x.value[i] += 3.0; // nonzero mean
    Var y = tape.batchnorm(tape.param(x), bn, true);
    for (int c = 0; c < C; ++c) {
        double mean = 0.0, var = 0.0;
        for (int r = 0; r < R; ++r) mean += tape.value(y)[r * C + c];
        mean /= R;
        for (int r = 0; r < R; ++r) {
            const double d = tape.value(y)[r * C + c] - mean;
            var += d * d;
        }
        var /= R;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-4);
    }
    // running stats moved off their init
    CHECK(bn.running_mean[0] != 0.0);

    // inference with unit running stats is the identity up to gamma/beta
    // (and the 1e-5 variance epsilon)
    BatchNormState<double> frozen("frozen", C);
    Tape<double> tape2;
    Var y2 = tape2.batchnorm(tape2.param(x), frozen, false);
    for (size_t i = 0; i < x.value.size(); ++i)
        CHECK(tape2.value(y2)[i] == doctest::Approx(x.value[i]).epsilon(1e-4));

    // gradient check, both modes
    for (bool training : {true, false}) {
        BatchNormState<double> state("gc", C);
        for (auto& v : state.gamma.value) v = 0.7 + 0.1 * rng.uniform();
        for (auto& v : state.beta.value) v = 0.2 * rng.gaussian();
        Parameter<double> xin = random_param("xin", {8, C}, rng);
        std::vector<Parameter<double>*> params = {&xin, &state.gamma, &state.beta};
        auto loss = [&](bool with_grad) {
            Tape<double> t;
            Var out = t.batchnorm(t.param(xin), state, training);
            Var l = t.sum(t.mul(out, out));
            if (with_grad) t.backward(l);
            return t.value(l)[0];
        };
        Rng probe(21);
        auto r = grad_check<double>(params, loss, 20, probe);
        INFO("training mode: " << training);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("batchnorm rejects degenerate training batches") {
    BatchNormState<double> bn("bn", 3);
    Tape<double> tape;
    Var x = tape.leaf(1, 3, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(tape.batchnorm(x, bn, true), NumericalError);
    CHECK_NOTHROW(tape.batchnorm(x, bn, false));
}

TEST_CASE("lstm zero parameters give zero hidden states") {
    LstmCellParams<double> cell("cell", 3, 4);
    Tape<double> tape;
    Rng rng(6);
    Var x = tape.leaf(5, 3, random_vec(15, rng));
    Var h = lstm_layer(tape, x, 5, 1, cell, false);
    for (double v : tape.value(h)) CHECK(v == 0.0);
}

TEST_CASE("length-1 lstm equals a single cell evaluation") {
    Rng rng(7);
    const int D = 3, H = 4;
    LstmCellParams<double> cell("cell", D, H);
    for (auto* p : {&cell.w_ih, &cell.w_hh, &cell.b_ih, &cell.b_hh})
        for (auto& v : p->value) v = 0.5 * rng.gaussian();
    std::vector<double> xin = random_vec(D, rng);

    Tape<double> tape;
    Var h = lstm_layer(tape, tape.leaf(1, D, xin), 1, 1, cell, false);

    // manual cell: gates = W_ih x + b_ih + b_hh (h_prev = 0)
    for (int j = 0; j < H; ++j) {
        auto gate = [&](int block) {
            const int row = block * H + j;
            double acc = cell.b_ih.value[row] + cell.b_hh.value[row];
            for (int i = 0; i < D; ++i) acc += cell.w_ih.value[row * D + i] * xin[i];
            return acc;
        };
        const double in_g = 1.0 / (1.0 + std::exp(-gate(0)));
        const double cand = std::tanh(gate(2));
        const double out_g = 1.0 / (1.0 + std::exp(-gate(3)));
        const double expect = out_g * std::tanh(in_g * cand);
        CHECK(tape.value(h)[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("lstm bptt gradients match finite differences") {
    Rng rng(8);
    const int K = 4, D = 3, H = 3;
    LstmCellParams<double> cell("cell", D, H);
    for (auto* p : {&cell.w_ih, &cell.w_hh, &cell.b_ih, &cell.b_hh})
        for (auto& v : p->value) v = 0.6 * rng.gaussian();
    Parameter<double> x = random_param("x", {K, D}, rng);
    std::vector<Parameter<double>*> params = {&cell.w_ih, &cell.w_hh, &cell.b_ih, &cell.b_hh, &x};

    for (bool reverse : {false, true}) {
        auto loss = [&](bool with_grad) {
            Tape<double> t;
            Var h = lstm_layer(t, t.param(x), K, 1, cell, reverse);
            Var l = t.sum(t.mul(h, h));
            if (with_grad) t.backward(l);
            return t.value(l)[0];
        };
        Rng probe(31);
        auto r = grad_check<double>(params, loss, 16, probe);
        INFO("reverse: " << reverse);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("tied parameters accumulate summed gradients") {
    Rng rng(9);
    Parameter<double> w = random_param("w", {3, 3}, rng);
    Parameter<double> b("b", {3});
    std::vector<double> x1 = random_vec(6, rng), x2 = random_vec(6, rng);

    // tied: same parameter used twice on one tape
    {
        Tape<double> tape;
        Var wv = tape.param(w);
        Var bv = tape.param(b);
        Var y1 = tape.affine(tape.leaf(2, 3, x1), wv, bv);
        Var y2 = tape.affine(tape.leaf(2, 3, x2), wv, bv);
        Var l = tape.sum(tape.mul(y1, y2));
        tape.backward(l);
    }
    std::vector<double> tied_grad = w.grad;

    // untied copies, gradients summed afterwards
    Parameter<double> wa = w, wb = w;
    wa.zero_grad();
    wb.zero_grad();
    {
        Tape<double> tape;
        Var bv = tape.param(b);
        Var y1 = tape.affine(tape.leaf(2, 3, x1), tape.param(wa), bv);
        Var y2 = tape.affine(tape.leaf(2, 3, x2), tape.param(wb), bv);
        Var l = tape.sum(tape.mul(y1, y2));
        tape.backward(l);
    }
    for (size_t i = 0; i < tied_grad.size(); ++i)
        CHECK(tied_grad[i] == doctest::Approx(wa.grad[i] + wb.grad[i]).epsilon(1e-12));
}

TEST_CASE("binding a parameter twice returns the same node") {
    Parameter<double> w("w", {2, 2});
    Tape<double> tape;
    Var a = tape.param(w);
    Var b = tape.param(w);
    CHECK(a.id == b.id);
}

TEST_CASE("grad_check calibration") {
    Rng rng(10);
    // linear function: error at rounding level
    Parameter<double> w = random_param("w", {1, 4}, rng);
    Parameter<double> b("b", {1});
    std::vector<double> x = random_vec(4, rng);
    std::vector<Parameter<double>*> params = {&w, &b};
    auto linear = [&](bool with_grad) {
        Tape<double> t;
        Var y = t.affine(t.leaf(1, 4, x), t.param(w), t.param(b));
        Var l = t.sum(y);
        if (with_grad) t.backward(l);
        return t.value(l)[0];
    };
    Rng probe(41);
    auto r = grad_check<double>(params, linear, 8, probe);
    CHECK(r.max_rel_error <= 1e-9);

    // fault injection: corrupted analytic gradient must be detected
    Parameter<double> tiny("tiny", {1});
    tiny.value[0] = 0.3;
    std::vector<Parameter<double>*> tp = {&tiny};
    auto corrupted = [&](bool with_grad) {
        Tape<double> t;
        Var v = t.param(tiny);
        Var l = t.sum(t.mul(v, v));
        if (with_grad) {
            t.backward(l);
            tiny.grad[0] += 0.5; // deliberate corruption
        }
        return t.value(l)[0];
    };
    Rng probe2(42);
    auto bad = grad_check<double>(tp, corrupted, 1, probe2);
    CHECK(bad.max_rel_error >= 1e-2);
}

TEST_CASE("forward and backward are deterministic") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        Parameter<double> w = random_param("w", {4, 4}, rng);
        Parameter<double> b = random_param("b", {4}, rng);
        Tape<double> tape;
        Var x = tape.leaf(3, 4, random_vec(12, rng));
        Var y = tape.tanh_op(tape.affine(x, tape.param(w), tape.param(b)));
        Var l = tape.sum(tape.mul(y, y));
        tape.backward(l);
        std::vector<double> out = {tape.value(l)[0]};
        out.insert(out.end(), w.grad.begin(), w.grad.end());
        return out;
    };
    CHECK(run(123) == run(123));
}
