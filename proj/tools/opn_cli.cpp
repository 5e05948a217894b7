// opn — prove lower bounds on Omega(N) for odd perfect N, verify the
// resulting transcripts, and run the factoring helpers.

#include <opn/opn.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

namespace {

opn::HintsDB load_hints_or_die(const std::string& path) {
    if (path.empty()) return {};
    try {
        return opn::load_hints(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::exit(2);
    }
}

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        std::exit(2);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

opn::Natural parse_natural_or_die(const std::string& text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
        std::cerr << "error: expected a decimal number, got '" << text << "'\n";
        std::exit(2);
    }
    return opn::Natural(text);
}

int cmd_prove(unsigned target, const std::string& hints_path, const std::string& out_path,
              const opn::EffortPolicy& policy, const opn::ProveOptions& opts) {
    const opn::HintsDB hints = load_hints_or_die(hints_path);

    const auto started = std::chrono::steady_clock::now();
    opn::Transcript t;
    try {
        t = opn::prove_min_omega(target, hints, policy, opts);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              started);

    const std::string text = opn::render(t);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return 2;
        }
        out << text;
    } else {
        std::cout << text;
    }

    // Stats go to stderr: the transcript itself must stay deterministic.
    std::cerr << "target: Omega(N) >= " << t.K << " (budget " << t.B << ")\n";
    std::cerr << "lines: " << opn::rendered_line_count(t) << "\n";
    std::cerr << "time: " << elapsed.count() << " ms\n";
    for (const auto& p : t.probable_primes)
        std::cerr << "probable prime (certification incomplete): " << p.get_str() << "\n";

    if (!t.complete) {
        std::cerr << "STUCK: the proof needs more factorizations:\n";
        for (const auto& w : t.wishes)
            std::cerr << "  sigma(" << w.origin_prime.get_str() << "^" << w.origin_exponent
                      << ") = " << opn::sigma_prime_power(w.origin_prime, w.origin_exponent).get_str()
                      << "\n";
        if (t.wishes.empty())
            std::cerr << "  (no residuals involved: raise --small-threshold)\n";
        std::cerr << "add their factors to the hints file and rerun\n";
        return 1;
    }
    std::cerr << "proof complete\n";
    return 0;
}

int cmd_verify(const std::string& path) {
    const opn::VerifyReport report = opn::verify_transcript(read_file_or_die(path));
    std::cout << report.to_string() << "\n";
    return report.ok() ? 0 : 1;
}

int cmd_factor(const std::string& number, const std::string& hints_path,
               const opn::EffortPolicy& policy) {
    const opn::Natural n = parse_natural_or_die(number);
    if (n < 1) {
        std::cerr << "error: n must be >= 1\n";
        return 2;
    }
    const opn::HintsDB hints = load_hints_or_die(hints_path);
    const opn::PartialFactorization pf = opn::factor_easy(n, hints, policy);

    std::string line;
    for (const auto& [p, k] : pf.prime_factors) {
        if (!line.empty()) line += ' ';
        line += p.get_str();
        if (k > 1) line += "^" + std::to_string(k);
    }
    std::cout << line << "\n";
    if (pf.residual)
        std::cout << "c_" << opn::decimal_digits(*pf.residual) << " = " << pf.residual->get_str()
                  << "\n";
    return 0;
}

int cmd_hints_check(const std::string& path) {
    try {
        const opn::HintsDB hints = opn::load_hints(path);
        std::cout << "ok: " << hints.entries.size() << " entries\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"odd-perfect-number Omega lower bound engine"};
    app.require_subcommand(1);

    // prove
    auto* prove = app.add_subcommand("prove", "prove Omega(N) >= K and write the transcript");
    unsigned target = 0;
    std::string hints_path, out_path;
    unsigned jobs = 1;
    std::uint64_t seed = 1;
    std::uint32_t trial_bound = 100000;
    std::uint32_t rho_cap = 1u << 20;
    std::uint32_t rho_restarts = 4;
    std::string small_threshold = "100000";
    prove->add_option("--target", target, "the bound K (odd, 9..81)")->required();
    prove->add_option("--hints", hints_path, "hints file of known factorizations");
    prove->add_option("--jobs", jobs, "parallel branch workers")
        ->check(CLI::Range(1u, std::numeric_limits<unsigned>::max()));
    prove->add_option("--seed", seed, "seed for the factoring heuristics");
    prove->add_option("--out", out_path, "transcript output path (stdout when omitted)");
    prove->add_option("--trial-bound", trial_bound, "trial division bound");
    prove->add_option("--rho-cap", rho_cap, "iteration cap per rho attempt");
    prove->add_option("--rho-restarts", rho_restarts, "rho restarts before giving up");
    prove->add_option("--small-threshold", small_threshold,
                      "interval upper bounds at or past this are 'stuck'");

    // verify
    auto* verify = app.add_subcommand("verify", "verify a transcript file");
    std::string verify_path;
    verify->add_option("path", verify_path, "transcript file")->required();

    // factor
    auto* factor = app.add_subcommand("factor", "factor one number with bounded effort");
    std::string factor_n;
    std::string factor_hints;
    factor->add_option("n", factor_n, "the number to factor")->required();
    factor->add_option("--hints", factor_hints, "hints file of known factorizations");
    factor->add_option("--trial-bound", trial_bound, "trial division bound");
    factor->add_option("--rho-cap", rho_cap, "iteration cap per rho attempt");
    factor->add_option("--rho-restarts", rho_restarts, "rho restarts before giving up");
    factor->add_option("--seed", seed, "seed for the factoring heuristics");

    // hints-check
    auto* hints_check = app.add_subcommand("hints-check", "validate a hints file");
    std::string hints_check_path;
    hints_check->add_option("path", hints_check_path, "hints file")->required();

    CLI11_PARSE(app, argc, argv);

    opn::EffortPolicy policy;
    policy.trial_division_bound = trial_bound;
    policy.rho_iteration_cap = rho_cap;
    policy.rho_restart_count = rho_restarts;
    policy.seed = seed;

    if (app.got_subcommand(prove)) {
        if (small_threshold.empty() ||
            small_threshold.find_first_not_of("0123456789") != std::string::npos) {
            std::cerr << "error: --small-threshold expects a decimal number\n";
            return 2;
        }
        opn::ProveOptions opts;
        opts.smallness_threshold = opn::Natural(small_threshold);
        opts.jobs = jobs;
        return cmd_prove(target, hints_path, out_path, policy, opts);
    }
    if (app.got_subcommand(verify)) return cmd_verify(verify_path);
    if (app.got_subcommand(factor)) return cmd_factor(factor_n, factor_hints, policy);
    if (app.got_subcommand(hints_check)) return cmd_hints_check(hints_check_path);
    return 2;
}
