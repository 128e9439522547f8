// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#include "decorstory/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "decorstory/decorstory.hpp"

namespace decorstory::cli {
namespace {

namespace fs = std::filesystem;

enum class Precision { f32, f64 };

struct GenSyntheticArgs {
    std::size_t n = 0;
    std::size_t d = 0;
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

struct DecorrelateArgs {
    std::string in;
    std::string out;
    double eps = DecorrelationParams{}.dependence_epsilon;
    std::string policy = "error";
};

struct SvrArgs {
    std::string in;
    std::string out;
    std::size_t frame = 0;
    SvrParams params;
};

struct IpcaArgs {
    std::string in;
    std::string out;
    std::size_t queries = PipelineConfig{}.query_rows;
    std::size_t d = PipelineConfig{}.attention_dim;
    std::uint64_t seed = 0;
};

struct PipelineArgs {
    std::string in;
    std::string out_dir;
    PipelineConfig config;
    std::string policy = "error";
    bool no_gs = false;
    bool no_svr = false;
    bool no_ipca = false;
};

struct MetricsArgs {
    std::string before;
    std::string after;
    std::string csv;
};

template <Real T>
int digits_for() {
    return std::is_same_v<T, float> ? 9 : 17;
}

DegeneratePolicy parse_policy(const std::string& s) {
    return s == "keep-normalized-original" ? DegeneratePolicy::keep_normalized_original : DegeneratePolicy::error;
}

std::ofstream open_text(const fs::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        raise(Errc::io_failure, "cannot open " + path.string() + " for writing");
    }
    return f;
}

constexpr const char* kCrlf = "\r\n";

void add_svr_flags(CLI::App* app, SvrParams& p) {
    app->add_option("--alpha", p.alpha, "Express exponent alpha")->check(CLI::NonNegativeNumber);
    app->add_option("--beta", p.beta, "Express scale beta")->check(CLI::PositiveNumber);
    app->add_option("--alpha-prime", p.alpha_prime, "Suppress exponent alpha'")->check(CLI::NonNegativeNumber);
    app->add_option("--beta-prime", p.beta_prime, "Suppress scale beta'")->check(CLI::PositiveNumber);
}

void add_policy_flags(CLI::App* app, double& eps, std::string& policy) {
    app->add_option("--eps", eps, "Relative residual-norm threshold for linear dependence")
        ->check(CLI::Validator(
            [](std::string& s) {
                double v = -1.0;
                const bool ok = CLI::detail::lexical_cast(s, v) && v >= 0.0 && v < 1.0;
                return ok ? std::string() : "eps must lie in [0, 1), got " + s;
            },
            "in [0, 1)"));
    app->add_option("--degenerate-policy", policy, "Linearly dependent frames: error | keep-normalized-original")
        ->check(CLI::IsMember({"error", "keep-normalized-original"}));
}

template <Real T>
int run_gen_synthetic(const GenSyntheticArgs& a, std::ostream& out) {
    const EmbeddingFile<T> file = gen_synthetic_prompt<T>(a.n, a.d, a.rho, a.seed);
    write_embeddings<T>(file.matrix, file.layout, a.out);
    out << "wrote " << a.out << " (" << file.matrix.rows() << "x" << file.matrix.cols() << ", " << a.n
        << " frames)\n";
    return kExitOk;
}

template <Real T>
int run_decorrelate(const DecorrelateArgs& a, std::ostream& out) {
    const EmbeddingFile<T> file = load_embeddings<T>(a.in);
    const DecorrelationParams params{a.eps, parse_policy(a.policy)};
    const FrameMatrix<T> frames = extract_frame_matrix<T>(file.matrix, file.layout);
    const DecorrelatedFrameMatrix<T> x = modified_gram_schmidt<T>(frames, params);
    write_embeddings<T>(inject_decorrelated<T>(file.matrix, file.layout, x), file.layout, a.out);
    out << "decorrelated " << frames.n_frames() << " frames";
    if (!x.degenerate_frames.empty()) {
        out << "; degenerate frames:";
        for (std::size_t k : x.degenerate_frames) out << ' ' << k;
    }
    out << '\n';
    return kExitOk;
}

template <Real T>
int run_svr(const SvrArgs& a, std::ostream& out) {
    const EmbeddingFile<T> file = load_embeddings<T>(a.in);
    const FrameMatrix<T> frames = extract_frame_matrix<T>(file.matrix, file.layout);
    const ConditionedMatrix<T> c =
        assemble_conditioned<T>(file.matrix, file.layout, frames.rows(), a.frame, a.params);
    write_embeddings<T>(c.data, file.layout, a.out);
    out << "conditioned frame " << a.frame << " of " << file.layout.n_frames() << '\n';
    return kExitOk;
}

template <Real T>
int run_ipca(const IpcaArgs& a, std::ostream& out) {
    const EmbeddingFile<T> file = load_embeddings<T>(a.in);
    // Draw order: Q (Lq x d), W_K (D x d), W_V (D x d), all uniform in [-1, 1).
    SplitMix64 rng(a.seed);
    auto draw = [&](std::size_t r, std::size_t c) {
        Matrix<T> m(r, c);
        for (T& x : m.values()) x = static_cast<T>(rng.uniform_pm1());
        return m;
    };
    Matrix<T> q = draw(a.queries, a.d);
    AttentionWeights<T> w{draw(file.matrix.cols(), a.d), draw(file.matrix.cols(), a.d)};
    const Matrix<T> result =
        ipca_attention<T>(make_ipca_batch<T>(std::move(q), file.matrix, file.layout, w));
    write_matrix<T>(result, a.out);
    out << "wrote attention output " << result.rows() << "x" << result.cols() << " to " << a.out << '\n';
    return kExitOk;
}

template <Real T>
int run_pipeline_cmd(PipelineArgs a, std::ostream& out) {
    const EmbeddingFile<T> file = load_embeddings<T>(a.in);
    a.config.decorrelation.degenerate_policy = parse_policy(a.policy);
    a.config.toggles = {!a.no_gs, !a.no_svr, !a.no_ipca};
    const auto frames = run_pipeline<T>(file.matrix, file.layout, a.config);

    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        raise(Errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());
    }
    Matrix<T> stacked(frames.size(), a.config.latent_dim);
    std::ofstream csv = open_text(dir / "frames.csv");
    csv << "frame,component,value" << kCrlf;
    std::ofstream trace = open_text(dir / "trace.csv");
    trace << "frame,step,latent_norm" << kCrlf;
    for (std::size_t j = 0; j < frames.size(); ++j) {
        const auto& f = frames[j];
        stacked.set_row(j, f.vector);
        for (std::size_t i = 0; i < f.vector.size(); ++i) {
            csv << f.frame_index << ',' << i << ',' << format_real(f.vector[i], digits_for<T>()) << kCrlf;
        }
        for (std::size_t s = 0; s < f.trace.size(); ++s) {
            trace << f.frame_index << ',' << s << ',' << format_real(f.trace[s]) << kCrlf;
        }
    }
    if (!csv || !trace) {
        raise(Errc::io_failure, "write error in " + dir.string());
    }
    write_matrix<T>(stacked, dir / "frames.demb");
    out << "generated " << frames.size() << " frames into " << dir.string() << '\n';
    return kExitOk;
}

template <Real T>
int run_metrics(const MetricsArgs& a, std::ostream& out) {
    const EmbeddingFile<T> before = load_embeddings<T>(a.before);
    const EmbeddingFile<T> after = load_embeddings<T>(a.after);
    const FrameMatrix<T> xb = extract_frame_matrix<T>(before.matrix, before.layout);
    const FrameMatrix<T> xa = extract_frame_matrix<T>(after.matrix, after.layout);
    if (xb.n_frames() != xa.n_frames()) {
        raise(Errc::shape_mismatch, "before/after frame counts differ");
    }
    const CorrelationReport rb = correlation_report<T>(xb.rows());
    const CorrelationReport ra = correlation_report<T>(xa.rows());

    std::ofstream csv = open_text(a.csv);
    csv << "report,n_frames,mean_abs_offdiag,max_abs_offdiag,effective_rank" << kCrlf;
    for (const auto& [name, r] : {std::pair<const char*, const CorrelationReport&>{"before", rb}, {"after", ra}}) {
        csv << name << ',' << r.gram.rows() << ',' << format_real(r.mean_abs_offdiag) << ','
            << format_real(r.max_abs_offdiag) << ',' << format_real(r.effective_rank) << kCrlf;
    }
    if (!csv) {
        raise(Errc::io_failure, "write error on " + a.csv);
    }
    out << "mean |cos| before " << format_real(rb.mean_abs_offdiag, 6) << ", after "
        << format_real(ra.mean_abs_offdiag, 6) << '\n';
    return kExitOk;
}

template <Real T>
struct Commands {
    static int dispatch(const std::string& name, const GenSyntheticArgs& gen, const DecorrelateArgs& dec,
                        const SvrArgs& svr, const IpcaArgs& ipca, const PipelineArgs& pipe,
                        const MetricsArgs& metrics, std::ostream& out) {
        if (name == "gen-synthetic") return run_gen_synthetic<T>(gen, out);
        if (name == "decorrelate") return run_decorrelate<T>(dec, out);
        if (name == "svr") return run_svr<T>(svr, out);
        if (name == "ipca") return run_ipca<T>(ipca, out);
        if (name == "pipeline") return run_pipeline_cmd<T>(pipe, out);
        return run_metrics<T>(metrics, out);
    }
};

}  // namespace

std::string format_real(double value, int significant_digits) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, significant_digits);
    return std::string(buf, res.ptr);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Precision precision = Precision::f64;
    if (const char* env = std::getenv("DECORSTORY_FLOAT")) {
        const std::string v(env);
        if (v == "f32") {
            precision = Precision::f32;
        } else if (v != "f64" && !v.empty()) {
            err << "DECORSTORY_FLOAT must be f32 or f64, got '" << v << "'\n";
            return kExitUsage;
        }
    }

    CLI::App app{"Training-free prompt-embedding decorrelation and conditioning toolkit", "decorstory"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.footer("Environment: DECORSTORY_FLOAT=f32|f64 (default f64), DECORSTORY_SIMD=scalar|avx2|neon");

    GenSyntheticArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic prompt with correlated frame embeddings");
    gen_cmd->add_option("--n", gen.n, "Number of frames")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--d", gen.d, "Embedding dimension")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--rho", gen.rho, "Shared-component weight in [0, 1]")->required()->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--out", gen.out, "Output DEMB path")->required();

    DecorrelateArgs dec;
    auto* dec_cmd = app.add_subcommand("decorrelate", "Gram-Schmidt decorrelate frame spans");
    dec_cmd->add_option("--in", dec.in, "Input DEMB path")->required();
    dec_cmd->add_option("--out", dec.out, "Output DEMB path")->required();
    add_policy_flags(dec_cmd, dec.eps, dec.policy);

    SvrArgs svr;
    auto* svr_cmd = app.add_subcommand("svr", "Build the singular-value reweighted matrix for one frame");
    svr_cmd->add_option("--in", svr.in, "Input (decorrelated) DEMB path")->required();
    svr_cmd->add_option("--frame", svr.frame, "Target frame index (1-based)")->required();
    add_svr_flags(svr_cmd, svr.params);
    svr_cmd->add_option("--out", svr.out, "Output DEMB path")->required();

    IpcaArgs ipca;
    auto* ipca_cmd = app.add_subcommand("ipca", "Identity-preserving cross-attention with seeded queries and weights");
    ipca_cmd->add_option("--in", ipca.in, "Input (conditioned) DEMB path")->required();
    ipca_cmd->add_option("--queries", ipca.queries, "Number of query rows")->check(CLI::PositiveNumber);
    ipca_cmd->add_option("--d", ipca.d, "Key/query dimension")->check(CLI::PositiveNumber);
    ipca_cmd->add_option("--seed", ipca.seed, "Random seed for queries and projections");
    ipca_cmd->add_option("--out", ipca.out, "Output DEMB path (attention output, no layout)")->required();

    PipelineArgs pipe;
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full conditioning pipeline over the toy denoiser");
    pipe_cmd->add_option("--in", pipe.in, "Input DEMB path")->required();
    pipe_cmd->add_option("--steps", pipe.config.steps, "Denoising steps T")->check(CLI::PositiveNumber);
    pipe_cmd->add_option("--seed", pipe.config.seed, "Seed for weights and initial noise");
    pipe_cmd->add_option("--eta", pipe.config.step_size, "Denoiser step size")->check(CLI::PositiveNumber);
    pipe_cmd->add_option("--latent-dim", pipe.config.latent_dim, "Latent size")->check(CLI::PositiveNumber);
    pipe_cmd->add_option("--queries", pipe.config.query_rows, "Query rows per step")->check(CLI::PositiveNumber);
    pipe_cmd->add_option("--d", pipe.config.attention_dim, "Key/query dimension")->check(CLI::PositiveNumber);
    add_svr_flags(pipe_cmd, pipe.config.svr);
    add_policy_flags(pipe_cmd, pipe.config.decorrelation.dependence_epsilon, pipe.policy);
    pipe_cmd->add_flag("--no-gs", pipe.no_gs, "Skip Gram-Schmidt decorrelation");
    pipe_cmd->add_flag("--no-svr", pipe.no_svr, "Skip singular-value reweighting");
    pipe_cmd->add_flag("--no-ipca", pipe.no_ipca, "Use plain attention instead of IPCA");
    pipe_cmd->add_flag("--per-frame-noise", pipe.config.per_frame_noise, "Draw a separate initial latent per frame");
    pipe_cmd->add_flag("--parallel-frames", pipe.config.parallel_frames, "Condition and denoise frames concurrently");
    pipe_cmd->add_option("--out-dir", pipe.out_dir, "Output directory")->required();

    MetricsArgs metrics;
    auto* metrics_cmd = app.add_subcommand("metrics", "Frame correlation report before/after decorrelation");
    metrics_cmd->add_option("--before", metrics.before, "DEMB path before decorrelation")->required();
    metrics_cmd->add_option("--after", metrics.after, "DEMB path after decorrelation")->required();
    metrics_cmd->add_option("--csv", metrics.csv, "Output CSV path")->required();

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("decorstory");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_storage) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (precision == Precision::f32) {
            return Commands<float>::dispatch(name, gen, dec, svr, ipca, pipe, metrics, out);
        }
        return Commands<double>::dispatch(name, gen, dec, svr, ipca, pipe, metrics, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomainError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomainError;
    }
}

}  // namespace decorstory::cli
