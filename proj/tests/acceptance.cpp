// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "cli_helpers.hpp"
#include "reference_pipeline.hpp"
#include "test_support.hpp"

using namespace decorstory;
using namespace decorstory::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

std::vector<Matrix<double>> gs_inputs() {
    SplitMix64 rng(0xACCE55);
    std::vector<Matrix<double>> inputs;
    for (int i = 0; i < 200; ++i) {
        const std::size_t d = uniform_index(rng, 1, 256);
        const std::size_t n = uniform_index(rng, 1, std::min<std::size_t>(d, 16));
        inputs.push_back(gaussian_matrix(rng, n, d));
    }
    return inputs;
}

Outcome orthogonality() {
    const auto inputs = gs_inputs();
    const auto t0 = Clock::now();
    double worst_gram = 0, worst_mean = 0;
    for (const auto& m : inputs) {
        const FrameMatrix<double> x(m, RepresentativeMode::single_token);
        const auto out = modified_gram_schmidt(x);
        const auto [before, after] = correlation_report(x, out);
        const Eigen::MatrixXd e = to_eigen(out.rows);
        worst_gram = std::max(
            worst_gram, (e * e.transpose() - Eigen::MatrixXd::Identity(e.rows(), e.rows())).cwiseAbs().maxCoeff());
        worst_mean = std::max(worst_mean, after.mean_abs_offdiag);
    }
    const double secs = seconds_since(t0);
    return {worst_gram <= 1e-8 && worst_mean <= 1e-8 && secs < 5.0,
            fmt("max|XX^T-I|=%.3g max after.mean_abs_offdiag=%.3g time=%.3fs", worst_gram, worst_mean, secs)};
}

Outcome span_direction() {
    double worst_resid = 0;
    bool positive = true;
    for (const auto& m : gs_inputs()) {
        const auto out = modified_gram_schmidt(FrameMatrix<double>(m, RepresentativeMode::single_token));
        const Eigen::MatrixXd xe = to_eigen(m);
        const Eigen::MatrixXd oe = to_eigen(out.rows);
        for (Eigen::Index k = 0; k < xe.rows(); ++k) {
            const Eigen::MatrixXd basis = xe.topRows(k + 1).transpose();
            const Eigen::VectorXd target = oe.row(k).transpose();
            const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(target);
            worst_resid = std::max(worst_resid, (basis * coef - target).norm());
        }
        // c~_1 = lambda c_1 with lambda > 0.
        const double lambda = oe.row(0).dot(xe.row(0)) / xe.row(0).squaredNorm();
        positive = positive && lambda > 0 && (oe.row(0) - lambda * xe.row(0)).norm() <= 1e-12;
    }
    return {worst_resid <= 1e-8 && positive,
            fmt("max least-squares residual=%.3g first row positive multiple=%s", worst_resid,
                positive ? "yes" : "no")};
}

Outcome svd_correctness() {
    SplitMix64 rng(0x5BD);
    std::vector<Matrix<double>> stacks;
    for (int i = 0; i < 1000; ++i) stacks.push_back(gaussian_matrix(rng, 2, uniform_index(rng, 1, 512)));
    const auto t0 = Clock::now();
    std::vector<ThinSvd<double>> results;
    results.reserve(stacks.size());
    for (const auto& a : stacks) results.push_back(thin_svd(a));
    const double secs = seconds_since(t0);

    double worst_rec = 0, worst_sigma = 0;
    for (std::size_t i = 0; i < stacks.size(); ++i) {
        const auto& a = stacks[i];
        const auto& s = results[i];
        const std::vector<double> sig(s.sigma.begin(), s.sigma.end());
        const double fro = to_eigen(a).norm();
        worst_rec = std::max(worst_rec, (to_eigen(reconstruct_stack(s, sig)) - to_eigen(a)).norm() /
                                            std::max(1.0, fro));
        const Eigen::MatrixXd e = to_eigen(a);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(e * e.transpose()));
        const double s1 = std::sqrt(std::max(es.eigenvalues()(1), 0.0));
        const double s2 = std::sqrt(std::max(es.eigenvalues()(0), 0.0));
        worst_sigma = std::max(worst_sigma, std::abs(s.sigma[0] - s1));
        if (s.sigma.size() > 1) worst_sigma = std::max(worst_sigma, std::abs(s.sigma[1] - s2));
    }
    return {worst_rec <= 1e-12 && worst_sigma <= 1e-10 && secs < 5.0,
            fmt("max rel reconstruction=%.3g max sigma diff=%.3g time=%.3fs", worst_rec, worst_sigma, secs)};
}

Outcome svr_identity() {
    SplitMix64 rng(0x1D);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = uniform_index(rng, 1, 6);
        const RandomPrompt p = random_prompt(rng, n, uniform_index(rng, n, 64), 3, true);
        const auto x = modified_gram_schmidt(extract_frame_matrix(p.tokens, p.layout));
        const Matrix<double> ct = inject_decorrelated(p.tokens, p.layout, x);
        const std::size_t j = uniform_index(rng, 1, p.layout.n_frames());
        const auto out = assemble_conditioned(ct, p.layout, x, j, SvrParams::identity());
        worst = std::max(worst, max_abs_diff(out.data, ct));
    }
    return {worst <= 1e-10, fmt("max |C^(j) - C~|=%.3g over 100 instances", worst)};
}

Outcome svr_analytic() {
    SvrParams p;
    p.alpha = std::log(2.0);
    p.alpha_prime = std::log(2.0);
    const std::vector<double> e1{1, 0}, e2{0, 1};
    const auto [fe, ee] = svr_express<double>(e1, e2, p);
    const auto [fs, es] = svr_suppress<double>(e1, e2, p);
    const double de = std::max({std::abs(fe[0] - 2), std::abs(fe[1]), std::abs(ee[0]), std::abs(ee[1] - 2)});
    const double ds = std::max({std::abs(fs[0] - 0.5), std::abs(fs[1]), std::abs(es[0]), std::abs(es[1] - 0.5)});
    return {de <= 1e-12 && ds <= 1e-12, fmt("express err=%.3g suppress err=%.3g", de, ds)};
}

Outcome ipca_oracle() {
    SplitMix64 rng(0x1BCA);
    double worst = 0, worst_row = 0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t m = uniform_index(rng, 1, 8), d = uniform_index(rng, 1, 8), lq = uniform_index(rng, 1, 8);
        PromptLayout l;
        // M = 1..3 cannot hold SOT/identity/frame/EOT; use an identity-only mask then.
        const Matrix<double> k = uniform_matrix(rng, m, d), v = uniform_matrix(rng, m, d);
        Matrix<double> k_id = k, v_id = v;
        if (m >= 4) {
            const std::size_t id_len = uniform_index(rng, 1, m - 3);
            l = {0, {1, id_len}, {{id_len + 1, m - 2}}, m - 1};
            std::tie(k_id, v_id) = identity_mask(k, v, l);
        }
        const AttentionBatch<double> b{uniform_matrix(rng, lq, d), k, v, k_id, v_id};
        worst = std::max(worst, max_abs_diff(ipca_attention(b), naive_attention_oracle(b)));
        const Matrix<double> w = ipca_attention_weights(b);
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double s = 0;
            for (double x : w.row(r)) s += x;
            worst_row = std::max(worst_row, std::abs(s - 1.0));
        }
    }
    return {worst <= 1e-12 && worst_row <= 1e-12,
            fmt("max |ipca - oracle|=%.3g max |row sum - 1|=%.3g", worst, worst_row)};
}

PipelineConfig fixed_config() {
    PipelineConfig c;
    c.latent_dim = 4;
    c.steps = 5;
    c.seed = 1;
    return c;
}

Outcome end_to_end() {
    const auto inst = reference::fixed_instance();
    PipelineConfig c = fixed_config();
    const auto t0 = Clock::now();
    const auto a = run_pipeline(inst.tokens, inst.layout, c);
    const auto b = run_pipeline(inst.tokens, inst.layout, c);
    c.parallel_frames = true;
    const auto par = run_pipeline(inst.tokens, inst.layout, c);
    const double secs = seconds_since(t0);

    bool identical = a.size() == 3;
    for (std::size_t j = 0; j < a.size(); ++j) {
        identical = identical && a[j].vector == b[j].vector && a[j].vector == par[j].vector &&
                    a[j].trace == b[j].trace && a[j].trace == par[j].trace;
    }
    reference::Settings st;
    st.latent_dim = 4;
    st.steps = 5;
    st.seed = 1;
    const auto ref = reference::run(inst.tokens, inst.layout, st);
    double worst = 0;
    for (std::size_t j = 0; j < a.size(); ++j)
        for (std::size_t i = 0; i < 4; ++i)
            worst = std::max(worst, std::abs(a[j].vector[i] - ref[j](static_cast<Eigen::Index>(i))));
    return {identical && worst <= 1e-9 && secs < 1.0,
            fmt("bit-identical=%s max |lib - reference|=%.3g time(3 runs)=%.3fs", identical ? "yes" : "no", worst,
                secs)};
}

Outcome toggles() {
    const auto inst = reference::fixed_instance();
    PipelineConfig off = fixed_config();
    off.toggles.enable_svr = false;
    PipelineConfig id = fixed_config();
    id.svr = SvrParams::identity();
    const auto a = run_pipeline(inst.tokens, inst.layout, off);
    const auto b = run_pipeline(inst.tokens, inst.layout, id);
    double worst = 0;
    for (std::size_t j = 0; j < a.size(); ++j)
        for (std::size_t i = 0; i < a[j].vector.size(); ++i)
            worst = std::max(worst, std::abs(a[j].vector[i] - b[j].vector[i]));

    Matrix<double> c = inst.tokens;
    PromptLayout l = inst.layout;
    l.frames = {{3, 3}, {4, 4}, {5, 5}};
    c.set_row(4, c.row(3));
    c.set_row(5, c.row(3));
    PipelineConfig all_off = fixed_config();
    all_off.toggles = {false, false, false};
    const auto o = run_pipeline(c, l, all_off);
    const bool same = o[0].vector == o[1].vector && o[1].vector == o[2].vector;
    return {worst <= 1e-10 && same,
            fmt("max |svr off - identity svr|=%.3g all-off identical frames=%s", worst, same ? "yes" : "no")};
}

Outcome correlation_reduction() {
    double before_sum = 0, worst_after = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto x = gen_synthetic<double>(8, 128, 0.9, seed);
        const auto [before, after] = correlation_report(x, modified_gram_schmidt(x));
        before_sum += before.mean_abs_offdiag;
        worst_after = std::max(worst_after, after.mean_abs_offdiag);
    }

    // CLI metrics output for one seed against the library report.
    TempDir dir;
    bool csv_ok = run({"gen-synthetic", "--n", "8", "--d", "128", "--rho", "0.9", "--seed", "0", "--out",
                       (dir / "a.demb").string()})
                      .code == 0 &&
                  run({"decorrelate", "--in", (dir / "a.demb").string(), "--out", (dir / "b.demb").string()}).code ==
                      0 &&
                  run({"metrics", "--before", (dir / "a.demb").string(), "--after", (dir / "b.demb").string(),
                       "--csv", (dir / "m.csv").string()})
                          .code == 0;
    if (csv_ok) {
        const auto rows = parse_csv(slurp(dir / "m.csv"));
        const auto x = gen_synthetic<double>(8, 128, 0.9, 0);
        const auto [before, after] = correlation_report(x, modified_gram_schmidt(x));
        csv_ok = rows.size() == 3;
        for (std::size_t r = 1; csv_ok && r < 3; ++r) {
            const CorrelationReport& rep = r == 1 ? before : after;
            csv_ok = rows[r].size() == 5 && parse_double(rows[r][2]) == rep.mean_abs_offdiag &&
                     parse_double(rows[r][3]) == rep.max_abs_offdiag &&
                     parse_double(rows[r][4]) == rep.effective_rank;
        }
    }
    const double before_mean = before_sum / 50;
    return {worst_after <= 1e-8 && csv_ok,
            fmt("mean before=%.4f max after=%.3g csv exact=%s", before_mean, worst_after, csv_ok ? "yes" : "no")};
}

Outcome round_trip() {
    TempDir dir;
    SplitMix64 rng(0xF0F0);
    int ok = 0;
    for (int i = 0; i < 100; ++i) {
        const RandomPrompt p = random_prompt(rng, uniform_index(rng, 1, 6), uniform_index(rng, 1, 32), 3, true);
        const auto path = dir / ("r" + std::to_string(i) + ".demb");
        write_embeddings(p.tokens, p.layout, path);
        const auto back = load_embeddings<double>(path);
        if (back.layout == p.layout && back.matrix.rows() == p.tokens.rows() &&
            std::memcmp(back.matrix.data(), p.tokens.data(), p.tokens.size() * sizeof(double)) == 0)
            ++ok;
    }
    bool hashes = run({"gen-synthetic", "--n", "3", "--d", "16", "--rho", "0.7", "--seed", "2", "--out",
                       (dir / "a.demb").string()})
                      .code == 0;
    for (const char* o : {"runs1", "runs2"}) {
        hashes = hashes && run({"pipeline", "--in", (dir / "a.demb").string(), "--seed", "1", "--steps", "5",
                                "--out-dir", (dir / o).string()})
                                   .code == 0;
    }
    for (const char* f : {"frames.csv", "trace.csv", "frames.demb"}) {
        hashes = hashes && read_file_bytes(dir / ("runs1/" + std::string(f))) ==
                               read_file_bytes(dir / ("runs2/" + std::string(f)));
    }
    return {ok == 100 && hashes, fmt("bit-exact round trips=%d/100 pipeline files identical=%s", ok,
                                     hashes ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"orthogonality", orthogonality},
        {"span and direction preservation", span_direction},
        {"SVD correctness", svd_correctness},
        {"SVR identity limit", svr_identity},
        {"SVR analytic case", svr_analytic},
        {"IPCA oracle equivalence", ipca_oracle},
        {"end-to-end determinism and reference match", end_to_end},
        {"toggle consistency", toggles},
        {"correlation reduction", correlation_reduction},
        {"format round trip", round_trip},
    };
    std::printf("SIMD kernels: %s\n", std::string(simd::to_string(simd::active_isa())).c_str());
    int failures = 0;
    int index = 1;
    for (const auto& [name, fn] : criteria) {
        Outcome o{false, ""};
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail.c_str());
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", 10 - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
