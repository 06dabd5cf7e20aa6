// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qsdc/cli.hpp"
#include "test_support.hpp"

using namespace qsdc;

namespace {

struct Outcome {
    bool ok;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Per-criterion runtime budgets in seconds (0 = none).
struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<Outcome()> body;
};

// ---------------------------------------------------------------------------

Outcome equivalence() {
    const auto grid = sphere_grid(200);
    double worst = 0.0;
    for (double alpha : {-0.2, 0.0, 0.3, 0.5, 0.73, 1.0}) {
        const auto small = werner_2x2(alpha);
        for (int two_s : {2, 4, 6, 8}) {
            worst = std::max(worst, equivalence_distance(small, werner_equivalent(alpha, two_s), grid));
        }
    }
    return {worst < 1e-10, fmt("max |dQ| = %.3e", worst)};
}

std::optional<double> first_npt(const std::function<DensityMatrix(double)>& make, double lo) {
    // 0.01-step sweep from lo; returns the first alpha with a negative partial transpose.
    for (int k = 0;; ++k) {
        const double alpha = std::min(1.0, lo + 0.01 * k);
        if (min_partial_transpose_eigenvalue(make(alpha)) < -1e-10) return alpha;
        if (alpha >= 1.0) return std::nullopt;
    }
}

Outcome separability() {
    bool ok = true;
    std::string detail;
    for (int s : {1, 2, 3}) {
        const int two_s = 2 * s;
        const double expect = double(s) / (s + 1);
        const auto x = first_npt([&](double a) { return werner_equivalent(a, two_s); },
                                 werner_equivalent_range(two_s).lower);
        const bool hit = x && std::abs(*x - expect) <= 0.01 + 1e-12;
        ok = ok && hit;
        detail += fmt("S=%d: %.2f (want %.4f) ", s, x.value_or(-1.0), expect);
    }
    const auto q = first_npt([](double a) { return werner_2x2(a); }, werner_2x2_range().lower);
    const bool hit = q && std::abs(*q - 1.0 / 3.0) <= 0.01 + 1e-12;
    detail += fmt("2x2: %.2f (want 0.3333)", q.value_or(-1.0));
    return {ok && hit, detail};
}

Outcome equivalent_chsh() {
    const auto settings = ChshSettings::optimal();
    double worst = 0.0;
    for (int two_s : {2, 4, 6, 8}) {
        for (int k = 0; k <= 20; ++k) {
            const double alpha = -0.2 + 1.2 * k / 20.0;
            const double v = chsh_exact(werner_equivalent(alpha, two_s), settings);
            worst = std::max(worst, std::abs(v - 2.0 * std::sqrt(2.0) * std::abs(alpha)));
        }
    }
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (chsh_exact(werner_equivalent(mid, 6), settings) > 2.0 ? hi : lo) = mid;
    }
    const double root = 0.5 * (lo + hi);
    const double err = std::abs(root - 1.0 / std::sqrt(2.0));
    return {worst < 1e-10 && err < 1e-9, fmt("max |S - 2sqrt2 alpha| = %.3e, crossing %.12f (err %.1e)", worst, root, err)};
}

Outcome headline() {
    const auto rho = werner_equivalent(0.73, 6);
    const double pt = min_partial_transpose_eigenvalue(rho);
    const double s = chsh_exact(rho, ChshSettings::optimal());
    return {pt >= -1e-10 && s > 2.06, fmt("min PT eigenvalue %.6f, CHSH %.6f", pt, s)};
}

Outcome key_rate_match() {
    constexpr std::size_t kPairs = 1'000'000;
    constexpr std::uint64_t kChunk = 2'000'000;
    bool ok = true;
    std::string detail;
    for (double alpha : {0.3, 0.5, 0.73}) {
        SessionConfig c;
        c.alpha = alpha;
        c.seed = 2024;
        const RoundSimulator sim(deployed_state(c), c.seed);
        BitString a, b;
        for (std::uint64_t first = 0; a.size() < kPairs; first += kChunk) {
            const auto records = sim.generate(first, kChunk, {});
            auto s = sift(records, c.two_s);
            a.insert(a.end(), s.alice_bits.begin(), s.alice_bits.end());
            b.insert(b.end(), s.bob_bits.begin(), s.bob_bits.end());
        }
        a.resize(kPairs);
        b.resize(kPairs);
        const double mi = empirical_mutual_information(a, b);
        const double qber = bit_error_fraction(a, b);
        const double dmi = std::abs(mi - key_rate(alpha));
        const double dq = std::abs(qber - (1.0 - alpha) / 2.0);
        ok = ok && dmi < 0.01 && dq < 0.01;
        detail += fmt("a=%.2f MI %.4f vs %.4f, QBER %.4f; ", alpha, mi, key_rate(alpha), qber);
    }
    return {ok, detail};
}

Outcome eavesdropping() {
    double worst = -1.0;
    for (int two_s : {2, 4, 6, 8}) {
        const auto range = werner_equivalent_range(two_s);
        for (int k = 0; k <= 100; ++k) {
            const double alpha = range.lower + (range.upper - range.lower) * k / 100.0;
            const auto attacked = eve_intercept_resend(werner_equivalent(alpha, two_s), InterceptPolicy::random_xz);
            worst = std::max(worst, chsh_exact(attacked, ChshSettings::optimal()));
        }
    }

    int attacked_fail = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SessionConfig c;
        c.alpha = 1.0;  // strongest correlations Eve could be hiding behind
        c.n_rounds = 20'000;
        c.security_fraction = 0.5;
        c.eve.kind = EveKind::intercept_xz;
        c.seed = seed;
        const auto t = run_session(c);
        if (t.verdict && !t.verdict->passed) ++attacked_fail;
    }

    // 8e5 security rounds: the z = 3 gate has too little power at 1e4 (see README).
    int clean_pass = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SessionConfig c;
        c.alpha = 0.73;
        c.n_rounds = 1'000'000;
        c.security_fraction = 0.8;
        c.seed = seed;
        const auto t = run_session(c);
        if (t.verdict && t.verdict->passed) ++clean_pass;
    }
    return {worst < 2.0 && attacked_fail >= 99 && clean_pass >= 99,
            fmt("max attacked CHSH %.4f, attacked sessions failing %d/100, clean sessions passing %d/100", worst,
                attacked_fail, clean_pass)};
}

Outcome message_round_trip() {
    std::mt19937_64 rng(77);
    SessionConfig exact;
    exact.alpha = 1.0;
    exact.n_rounds = 100'000;
    exact.seed = 5;
    for (int i = 0; i < 128; ++i) exact.message.push_back(std::uint8_t(rng() & 1));
    const auto t1 = run_session(exact);
    const bool exact_ok = !t1.aborted && t1.decoded == exact.message;

    SessionConfig noisy;
    noisy.alpha = 0.73;
    noisy.n_rounds = 4'000'000;
    noisy.seed = 6;
    for (int i = 0; i < 100'000; ++i) noisy.message.push_back(std::uint8_t(rng() & 1));
    const auto t2 = run_session(noisy);
    const double frac = t2.aborted ? 1.0 : bit_error_fraction(t2.decoded, noisy.message);
    const bool noisy_ok = !t2.aborted && std::abs(frac - 0.135) < 0.01;
    return {exact_ok && noisy_ok, fmt("alpha=1: %zu/128 bit errors; alpha=0.73: error fraction %.4f over %zu bits",
                                      t1.message_bit_errors, frac, noisy.message.size())};
}

Outcome oracle_suite() {
    double p_err = 0.0;
    for (int two_s : {1, 2, 3, 6, 8}) {
        const double s = 0.5 * two_s;
        for (double alpha : {-0.2, 0.3, 0.73, 1.0}) {
            const auto rho = werner_equivalent(alpha, two_s);
            for (auto la : kAliceLabels) {
                for (auto lb : kBobLabels) {
                    const Direction da = canonical_direction(la), db = canonical_direction(lb);
                    const auto dist = joint_distribution(rho, da, db);
                    for (int a : {-1, 1}) {
                        for (int two_m = -two_s; two_m <= two_s; two_m += 2) {
                            const double want =
                                (1.0 - alpha * a * (0.5 * two_m / s) * da.dot(db)) / (2.0 * (two_s + 1));
                            p_err = std::max(p_err, std::abs(dist.prob(a, two_m) - want));
                        }
                    }
                }
            }
        }
    }

    double comm = 0.0, casimir = 0.0, scs = 0.0;
    std::mt19937_64 rng(3);
    for (int two_s = 1; two_s <= 10; ++two_s) {
        const auto rep = make_spin_rep(two_s);
        const Matrix &x = rep.s1(), &y = rep.s2(), &z = rep.s3();
        comm = std::max({comm, oracle::max_abs(x * y - y * x - kI * z), oracle::max_abs(y * z - z * y - kI * x),
                         oracle::max_abs(z * x - x * z - kI * y)});
        const double c = rep.spin() * (rep.spin() + 1);
        casimir = std::max(casimir, oracle::max_abs(x * x + y * y + z * z - c * Matrix::Identity(rep.dim(), rep.dim())));
        for (int k = 0; k < 20; ++k) {
            const auto n = oracle::random_direction(rng);
            const Vector v = coherent_state(rep, n);
            const Real3 want = n.cartesian();
            for (int i = 0; i < 3; ++i) {
                const double e = (v.adjoint() * rep.generator(i) * v)(0, 0).real() / rep.spin();
                scs = std::max(scs, std::abs(e - want[i]));
            }
        }
    }

    // (3/(S+1)) <sigma.a (x) S.b> on the equivalent state = <sigma.a (x) sigma.b> on the qubit pair.
    double ident = 0.0;
    for (int two_s : {1, 2, 4, 6, 8}) {
        const auto rep = make_spin_rep(two_s);
        for (double alpha : {-0.2, 0.5, 1.0}) {
            const auto big = werner_equivalent(alpha, two_s);
            const auto small = werner_2x2(alpha);
            for (int k = 0; k < 10; ++k) {
                const auto a = oracle::random_direction(rng), b = oracle::random_direction(rng);
                const Real3 ac = a.cartesian(), bc = b.cartesian();
                Matrix sa = Matrix::Zero(2, 2), sb = Matrix::Zero(2, 2), jb = Matrix::Zero(rep.dim(), rep.dim());
                for (int i = 0; i < 3; ++i) {
                    sa += ac[i] * oracle::sigma(i);
                    sb += bc[i] * oracle::sigma(i);
                    jb += bc[i] * rep.generator(i);
                }
                const double lhs = 3.0 / (rep.spin() + 1) * (big.data() * kron(sa, jb)).trace().real();
                const double rhs = (small.data() * kron(sa, sb)).trace().real();
                ident = std::max(ident, std::abs(lhs - rhs));
            }
        }
    }
    const bool ok = p_err < 1e-12 && comm < 1e-12 && casimir < 1e-12 && scs < 1e-12 && ident < 1e-12;
    return {ok, fmt("P(a,m) %.1e, commutators %.1e, Casimir %.1e, SCS %.1e, equivalent observables %.1e", p_err, comm,
                    casimir, scs, ident)};
}

Outcome determinism() {
    cli::CommandParams p;
    p.command = "session";
    p.config = cli::parse_config("seed = 42\nmessage_hex = c0ffee\n", {});
    const std::string first = cli::render_json(cli::dispatch(p).report);
    const std::string second = cli::render_json(cli::dispatch(p).report);
    p.threads = 2;
    const std::string threaded = cli::render_json(cli::dispatch(p).report);
    return {first == second && first == threaded,
            fmt("%zu-byte report, repeat %s, 2 threads %s", first.size(), first == second ? "identical" : "differs",
                first == threaded ? "identical" : "differs")};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "equivalence of Q functions", 10, equivalence},
        {2, "separability ranges", 5, separability},
        {3, "equivalent CHSH", 5, equivalent_chsh},
        {4, "headline regime", 1, headline},
        {5, "key rate", 60, key_rate_match},
        {6, "eavesdropping detection", 120, eavesdropping},
        {7, "message round trip", 0, message_round_trip},
        {8, "oracle suite", 0, oracle_suite},
        {9, "determinism", 0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = Clock::now();
        Outcome out;
        try {
            out = c.body();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double dt = seconds_since(start);
        const bool in_time = c.budget <= 0 || dt < c.budget;
        const bool ok = out.ok && in_time;
        if (!ok) ++failures;
        std::printf("%s criterion %d (%s): %s [%.2f s%s]\n", ok ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), dt,
                    in_time ? "" : fmt(", over %.0f s budget", c.budget).c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
