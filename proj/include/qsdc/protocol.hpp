#pragma once

// One QSDC session as a deterministic pipeline: setting choice and Born-rule
// outcomes per round, a pre-committed security subset feeding the CHSH gate,
// sifting of matched extremal rounds into correlated bits, XOR encoding of the
// message, decoding, and rate accounting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qsdc/chsh.hpp"
#include "qsdc/measurement.hpp"
#include "qsdc/random.hpp"
#include "qsdc/state.hpp"

namespace qsdc {

using BitString = std::vector<std::uint8_t>;

enum class EveKind : std::uint8_t { none, intercept_x, intercept_xz, depolarize };

struct EveModel {
    EveKind kind = EveKind::none;
    double q = 0.0;  // depolarising weight, only read for EveKind::depolarize
};

struct SessionConfig {
    int two_s = 6;
    double alpha = 0.73;
    std::uint64_t n_rounds = 2'000'000;
    double security_fraction = 0.5;
    double chsh_threshold = 2.0;
    double chsh_z = 3.0;
    EveModel eve;
    std::uint64_t seed = 1;
    BitString message;
};

inline std::uint64_t security_round_count(const SessionConfig& c) {
    return std::uint64_t(std::llround(c.security_fraction * double(c.n_rounds)));
}

/// Throws InvalidParameter naming the offending key.
inline void validate(const SessionConfig& c, bool require_rounds = true) {
    if (c.two_s < 1) throw InvalidParameter("two_s: must be >= 1, got " + std::to_string(c.two_s));
    const auto range = werner_equivalent_range(c.two_s);
    if (!std::isfinite(c.alpha) || !range.contains(c.alpha)) {
        throw InvalidParameter("alpha: " + std::to_string(c.alpha) + " is outside the valid interval " +
                               range.to_string() + " for two_s=" + std::to_string(c.two_s));
    }
    if (!(c.security_fraction > 0.0 && c.security_fraction < 1.0)) {
        throw InvalidParameter("security_fraction: must lie in (0, 1)");
    }
    if (!std::isfinite(c.chsh_threshold)) throw InvalidParameter("chsh_threshold: must be finite");
    if (!std::isfinite(c.chsh_z) || c.chsh_z < 0.0) throw InvalidParameter("chsh_z: must be finite and >= 0");
    if (c.eve.kind == EveKind::depolarize && !(c.eve.q >= 0.0 && c.eve.q <= 1.0)) {
        throw InvalidParameter("eve_q: must lie in [0, 1]");
    }
    for (auto bit : c.message) {
        if (bit > 1) throw InvalidParameter("message: bits must be 0 or 1");
    }
    if (require_rounds) {
        if (c.n_rounds < 4) throw InvalidParameter("n_rounds: must be >= 4");
        if (c.security_fraction * double(c.n_rounds) < 4.0) {
            throw InvalidParameter("security_fraction: security_fraction * n_rounds must be >= 4");
        }
    }
}

// ---------------------------------------------------------------------------
// Eavesdropper channels

enum class InterceptPolicy { fixed_x, random_xz };

namespace detail {

inline Matrix dephase_alice(const Matrix& rho, const Direction& axis, int dim_b) {
    const SpinRep half = make_spin_rep(1);
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& e : eigensystem(spin_along(half, axis, Normalization::unit))) {
        const Matrix p = kron(e.projector, Matrix::Identity(dim_b, dim_b));
        out += p * rho * p;
    }
    return out;
}

}  // namespace detail

/// Eve measures Alice's qubit along x (or, for random_xz, along x or z with
/// equal probability) and resends the post-measurement state.
inline DensityMatrix eve_intercept_resend(const DensityMatrix& rho, InterceptPolicy policy) {
    detail::require_qubit_qudit(rho, "eve_intercept_resend");
    const int db = rho.dims()[1];
    Matrix out = detail::dephase_alice(rho.data(), Direction::x(), db);
    if (policy == InterceptPolicy::random_xz) {
        out = 0.5 * (out + detail::dephase_alice(rho.data(), Direction::z(), db));
    }
    return DensityMatrix(std::move(out), rho.dims());
}

/// (1 - q) rho + q I / D.
inline DensityMatrix eve_depolarize(const DensityMatrix& rho, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("eve_depolarize: q must lie in [0, 1]");
    const int d = rho.dim();
    return DensityMatrix((1.0 - q) * rho.data() + q * Matrix::Identity(d, d) / double(d), rho.dims());
}

inline DensityMatrix apply_eve(const DensityMatrix& rho, const EveModel& eve) {
    switch (eve.kind) {
        case EveKind::none: return rho;
        case EveKind::intercept_x: return eve_intercept_resend(rho, InterceptPolicy::fixed_x);
        case EveKind::intercept_xz: return eve_intercept_resend(rho, InterceptPolicy::random_xz);
        case EveKind::depolarize: return eve_depolarize(rho, eve.q);
    }
    return rho;
}

/// The state Alice and Bob actually measure.
inline DensityMatrix deployed_state(const SessionConfig& c) {
    return apply_eve(werner_equivalent(c.alpha, c.two_s), c.eve);
}

// ---------------------------------------------------------------------------
// Round generation

/// Matched settings (X,X) or (XZ,XZ) and an extremal Bob outcome |m| = S.
inline bool sift_predicate(const RoundRecord& r, int two_s) {
    const bool matched = (r.alice == SettingLabel::x && r.bob == SettingLabel::x) ||
                         (r.alice == SettingLabel::xz && r.bob == SettingLabel::xz);
    return matched && std::abs(r.outcome.two_m) == two_s;
}

/// Exactly `count` of `n_rounds` indices flagged, chosen by selection sampling
/// from the seed alone (before any outcome is drawn).
inline std::vector<std::uint8_t> security_mask(std::uint64_t seed, std::uint64_t n_rounds, std::uint64_t count) {
    if (count > n_rounds) throw InvalidParameter("security_mask: count exceeds n_rounds");
    std::vector<std::uint8_t> mask(n_rounds, 0);
    RandomStream stream = RandomStream::derive(seed, StreamDomain::security_subset, 0);
    std::uint64_t needed = count;
    for (std::uint64_t i = 0; i < n_rounds && needed > 0; ++i) {
        if (stream.below(n_rounds - i) < needed) {
            mask[i] = 1;
            --needed;
        }
    }
    return mask;
}

/// Draws rounds for a fixed deployed state. Each round uses its own stream
/// derived from (seed, index), so any partition of the index range gives
/// identical records.
class RoundSimulator {
  public:
    RoundSimulator(const DensityMatrix& deployed, std::uint64_t seed) : seed_(seed) {
        if (!deployed.bipartite() || deployed.dims()[0] != 2) {
            throw DimensionMismatch("RoundSimulator: state must be 2 x (2S+1)");
        }
        two_s_ = deployed.dims()[1] - 1;
        tables_.reserve(9);
        for (auto la : kAliceLabels) {
            for (auto lb : kBobLabels) {
                tables_.push_back(joint_distribution(deployed, make_setting(Party::alice, la),
                                                     make_setting(Party::bob, lb)));
            }
        }
    }

    int two_s() const noexcept { return two_s_; }

    const JointDistribution& table(std::size_t alice_choice, std::size_t bob_choice) const {
        return tables_.at(alice_choice * 3 + bob_choice);
    }

    RoundRecord simulate(std::uint64_t index, bool security) const {
        RandomStream stream = RandomStream::derive(seed_, StreamDomain::round, index);
        const auto ia = std::size_t(stream.below(3));
        const auto ib = std::size_t(stream.below(3));
        RoundRecord r{index, kAliceLabels[ia], kBobLabels[ib], sample_round(tables_[ia * 3 + ib], stream),
                      RoundRole::security};
        if (!security) r.role = sift_predicate(r, two_s_) ? RoundRole::key : RoundRole::discarded;
        return r;
    }

    /// Rounds [first, first + count); mask (indexed from `first`) flags security rounds.
    std::vector<RoundRecord> generate(std::uint64_t first, std::uint64_t count,
                                      std::span<const std::uint8_t> mask, unsigned threads = 1) const {
        if (!mask.empty() && mask.size() != count) {
            throw InvalidParameter("RoundSimulator::generate: mask length must equal count");
        }
        std::vector<RoundRecord> out(count);
        auto fill = [&](std::uint64_t lo, std::uint64_t hi) {
            for (std::uint64_t i = lo; i < hi; ++i) out[i] = simulate(first + i, !mask.empty() && mask[i]);
        };
        threads = std::max(1u, threads);
        if (threads == 1 || count < 2 * threads) {
            fill(0, count);
            return out;
        }
        std::vector<std::jthread> workers;
        const std::uint64_t chunk = (count + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::uint64_t lo = std::min(count, t * chunk);
            const std::uint64_t hi = std::min(count, lo + chunk);
            workers.emplace_back(fill, lo, hi);
        }
        return out;  // jthreads join here
    }

  private:
    std::uint64_t seed_;
    int two_s_ = 0;
    std::vector<JointDistribution> tables_;
};

inline std::vector<RoundRecord> generate_rounds(const SessionConfig& c, unsigned threads = 1) {
    const RoundSimulator sim(deployed_state(c), c.seed);
    const auto mask = security_mask(c.seed, c.n_rounds, security_round_count(c));
    return sim.generate(0, c.n_rounds, mask, threads);
}

// ---------------------------------------------------------------------------
// Sifting, encoding and rates

struct SiftResult {
    BitString alice_bits;
    BitString bob_bits;
    std::vector<std::uint64_t> kept_indices;
};

/// Keeps non-security rounds passing sift_predicate. Alice bit (1 - a)/2, Bob
/// bit (1 + sign m)/2, so the bits agree with probability (1 + alpha)/2.
inline SiftResult sift(std::span<const RoundRecord> records, int two_s) {
    SiftResult out;
    for (const auto& r : records) {
        if (r.role == RoundRole::security || !sift_predicate(r, two_s)) continue;
        out.alice_bits.push_back(std::uint8_t((1 - r.outcome.a) / 2));
        out.bob_bits.push_back(r.outcome.two_m > 0 ? 1 : 0);
        out.kept_indices.push_back(r.index);
    }
    return out;
}

/// transmitted[i] = alice_bits[i] XOR message[i]: identity for 0, X for 1.
inline BitString encode_message(std::span<const std::uint8_t> message, std::span<const std::uint8_t> alice_bits) {
    if (message.size() > alice_bits.size()) throw KeyShortfall(message.size(), alice_bits.size());
    BitString out(message.size());
    for (std::size_t i = 0; i < message.size(); ++i) out[i] = std::uint8_t((alice_bits[i] ^ message[i]) & 1u);
    return out;
}

inline BitString decode_message(std::span<const std::uint8_t> transmitted, std::span<const std::uint8_t> bob_bits) {
    if (transmitted.size() != bob_bits.size()) {
        throw DimensionMismatch("decode_message: " + std::to_string(transmitted.size()) +
                                " transmitted bits but " + std::to_string(bob_bits.size()) + " key bits");
    }
    BitString out(transmitted.size());
    for (std::size_t i = 0; i < transmitted.size(); ++i) out[i] = std::uint8_t((transmitted[i] ^ bob_bits[i]) & 1u);
    return out;
}

inline double binary_entropy(double p) {
    auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
    return term(p) + term(1.0 - p);
}

/// (1+alpha)/2 log2(1+alpha) + (1-alpha)/2 log2(1-alpha), i.e. 1 - h2((1+alpha)/2).
inline double key_rate(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("key_rate: alpha must lie in [0, 1]");
    auto term = [](double x) { return x > 0.0 ? 0.5 * x * std::log2(x) : 0.0; };
    return term(1.0 + alpha) + term(1.0 - alpha);
}

/// Plug-in H(A) + H(B) - H(A,B) in bits from the 2x2 joint frequency table.
inline double empirical_mutual_information(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.empty()) throw InsufficientData("empirical_mutual_information: empty input");
    if (a.size() != b.size()) throw DimensionMismatch("empirical_mutual_information: length mismatch");
    std::array<double, 4> joint{};
    for (std::size_t i = 0; i < a.size(); ++i) joint[std::size_t((a[i] & 1u) * 2 + (b[i] & 1u))] += 1.0;
    const double n = double(a.size());
    auto h = [](std::initializer_list<double> ps) {
        double total = 0.0;
        for (double p : ps) total += p > 0.0 ? -p * std::log2(p) : 0.0;
        return total;
    };
    const double p00 = joint[0] / n, p01 = joint[1] / n, p10 = joint[2] / n, p11 = joint[3] / n;
    return h({p00 + p01, p10 + p11}) + h({p00 + p10, p01 + p11}) - h({p00, p01, p10, p11});
}

inline double bit_error_fraction(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.empty()) throw InsufficientData("bit_error_fraction: empty input");
    if (a.size() != b.size()) throw DimensionMismatch("bit_error_fraction: length mismatch");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < a.size(); ++i) errors += (a[i] != b[i]);
    return double(errors) / double(a.size());
}

// ---------------------------------------------------------------------------
// Session

struct SessionTranscript {
    SessionConfig config;
    std::vector<RoundRecord> rounds;
    std::uint64_t security_rounds = 0;
    double chsh_exact_deployed = 0.0;
    std::optional<ChshEstimate> chsh;
    std::optional<SecurityVerdict> verdict;
    bool aborted = false;
    std::string abort_reason;
    BitString alice_key;
    BitString bob_key;
    std::vector<std::uint64_t> kept_indices;
    BitString transmitted;
    BitString decoded;
    std::optional<double> qber;
    std::optional<double> key_rate_formula;
    std::optional<double> mutual_info_empirical;
    std::size_t message_bit_errors = 0;
};

inline SessionTranscript run_session(const SessionConfig& config, unsigned threads = 1) {
    validate(config);
    SessionTranscript t;
    t.config = config;
    const DensityMatrix deployed = deployed_state(config);
    t.chsh_exact_deployed = chsh_exact(deployed, ChshSettings::optimal());
    if (config.alpha >= 0.0) t.key_rate_formula = key_rate(config.alpha);

    // Step 1-2: settings and outcomes; the security subset is fixed first.
    t.security_rounds = security_round_count(config);
    const auto mask = security_mask(config.seed, config.n_rounds, t.security_rounds);
    const RoundSimulator sim(deployed, config.seed);
    t.rounds = sim.generate(0, config.n_rounds, mask, threads);

    // Step 3: CHSH gate on the security rounds only.
    std::vector<RoundRecord> security;
    security.reserve(t.security_rounds);
    for (const auto& r : t.rounds)
        if (r.role == RoundRole::security) security.push_back(r);
    try {
        t.chsh = chsh_estimate(security, ChshSettings::optimal(), config.two_s);
        t.verdict = security_decision(*t.chsh, config.chsh_threshold, config.chsh_z);
        if (!t.verdict->passed) {
            t.aborted = true;
            t.abort_reason = "CHSH lower bound does not exceed threshold";
        }
    } catch (const InsufficientData& e) {
        t.aborted = true;
        t.abort_reason = e.what();
    }
    if (t.aborted) {
        for (auto& r : t.rounds)
            if (r.role == RoundRole::key) r.role = RoundRole::discarded;
        return t;
    }

    // Step 4: sifting.
    SiftResult key = sift(t.rounds, config.two_s);
    t.alice_key = std::move(key.alice_bits);
    t.bob_key = std::move(key.bob_bits);
    t.kept_indices = std::move(key.kept_indices);
    if (!t.alice_key.empty()) {
        t.qber = bit_error_fraction(t.alice_key, t.bob_key);
        t.mutual_info_empirical = empirical_mutual_information(t.alice_key, t.bob_key);
    }

    // Step 5: XOR-masked broadcast and decoding.
    t.transmitted = encode_message(config.message, t.alice_key);
    t.decoded = decode_message(t.transmitted, std::span(t.bob_key).first(t.transmitted.size()));
    for (std::size_t i = 0; i < t.decoded.size(); ++i) t.message_bit_errors += (t.decoded[i] != config.message[i]);
    return t;
}

}  // namespace qsdc
