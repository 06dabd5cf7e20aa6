#include <gtest/gtest.h>

#include <random>

#include "qsdc/protocol.hpp"
#include "test_support.hpp"

using namespace qsdc;
using qsdc::oracle::max_abs;

namespace {

SessionConfig small_config(double alpha, std::uint64_t rounds, std::uint64_t seed) {
    SessionConfig c;
    c.alpha = alpha;
    c.n_rounds = rounds;
    c.seed = seed;
    return c;
}

RoundRecord key_round(SettingLabel a, SettingLabel b, int sign, int two_m, std::uint64_t index = 0) {
    return {index, a, b, {sign, two_m}, RoundRole::key};
}

}  // namespace

TEST(Eve, InterceptAlongXLeavesOnlyXCorrelations) {
    for (double a : {0.3, 0.73, 1.0}) {
        for (int two_s : {2, 6}) {
            const auto attacked = eve_intercept_resend(werner_equivalent(a, two_s), InterceptPolicy::fixed_x);
            EXPECT_NEAR(chsh_exact(attacked, ChshSettings::optimal()), std::sqrt(2.0) * a, 1e-10);
        }
    }
}

TEST(Eve, RandomInterceptKeepsChshBelowBound) {
    for (int k = -75; k <= 100; ++k) {
        const double a = k / 100.0;
        const auto attacked = eve_intercept_resend(werner_equivalent(a, 6), InterceptPolicy::random_xz);
        EXPECT_LT(chsh_exact(attacked, ChshSettings::optimal()), 2.0) << a;
    }
}

TEST(Eve, ChannelsAreUnitalOnMaximallyMixed) {
    const auto mixed = werner_equivalent(0.0, 6);
    for (auto policy : {InterceptPolicy::fixed_x, InterceptPolicy::random_xz}) {
        EXPECT_LT(max_abs(eve_intercept_resend(mixed, policy).data() - mixed.data()), 1e-15);
    }
}

TEST(Eve, DepolarizeFollowsAffineAlpha) {
    const auto rho = werner_equivalent(0.9, 6);
    EXPECT_LT(max_abs(eve_depolarize(rho, 0.0).data() - rho.data()), 1e-15);
    EXPECT_LT(max_abs(eve_depolarize(rho, 1.0).data() - Matrix::Identity(14, 14) / 14.0), 1e-15);
    EXPECT_LT(max_abs(eve_depolarize(rho, 0.3).data() - werner_equivalent(0.63, 6).data()), 1e-12);
    EXPECT_THROW(eve_depolarize(rho, 1.2), InvalidParameter);
    EXPECT_THROW(eve_depolarize(rho, -0.1), InvalidParameter);
}

TEST(Sift, BitMappingTable) {
    const std::vector<RoundRecord> records{
        key_round(SettingLabel::x, SettingLabel::x, +1, 6, 0),     // Alice 0, Bob 1: disagree
        key_round(SettingLabel::x, SettingLabel::x, +1, -6, 1),    // Alice 0, Bob 0: agree
        key_round(SettingLabel::xz, SettingLabel::xz, -1, 6, 2),   // Alice 1, Bob 1
        key_round(SettingLabel::x, SettingLabel::xz, -1, 6, 3),    // mismatched settings
        key_round(SettingLabel::z, SettingLabel::x_minus_z, -1, 6, 4),
        key_round(SettingLabel::x, SettingLabel::x, +1, 4, 5),     // not extremal
        {6, SettingLabel::x, SettingLabel::x, {-1, -6}, RoundRole::security},
    };
    const auto out = sift(records, 6);
    EXPECT_EQ(out.alice_bits, (BitString{0, 0, 1}));
    EXPECT_EQ(out.bob_bits, (BitString{1, 0, 1}));
    EXPECT_EQ(out.kept_indices, (std::vector<std::uint64_t>{0, 1, 2}));
    EXPECT_TRUE(sift({}, 6).alice_bits.empty());
}

TEST(Encoding, XorSemantics) {
    const BitString key{0, 1, 1, 0, 1, 0, 0, 1};
    EXPECT_EQ(encode_message(BitString(8, 0), key), key);
    BitString complement;
    for (auto b : key) complement.push_back(std::uint8_t(1 - b));
    EXPECT_EQ(encode_message(BitString(8, 1), key), complement);
    const BitString message{1, 1, 0, 1, 0};
    const auto sent = encode_message(message, key);
    EXPECT_EQ(sent.size(), message.size());
    EXPECT_EQ(decode_message(sent, std::span(key).first(5)), message);

    BitString bob = key;
    bob[2] ^= 1;
    const auto decoded = decode_message(sent, std::span(bob).first(5));
    for (std::size_t i = 0; i < message.size(); ++i) EXPECT_EQ(decoded[i] != message[i], i == 2);

    try {
        encode_message(BitString(9, 0), key);
        FAIL() << "expected KeyShortfall";
    } catch (const KeyShortfall& e) {
        EXPECT_EQ(e.achievable(), 8u);
        EXPECT_EQ(e.requested(), 9u);
    }
    EXPECT_THROW(decode_message(BitString(3, 0), BitString(4, 0)), DimensionMismatch);
}

TEST(KeyRate, FormulaValues) {
    EXPECT_DOUBLE_EQ(key_rate(1.0), 1.0);
    EXPECT_DOUBLE_EQ(key_rate(0.0), 0.0);
    EXPECT_NEAR(key_rate(0.73), 0.4290070399231103, 1e-14);
    for (int k = 0; k <= 100; ++k) {
        const double a = k / 100.0;
        EXPECT_NEAR(key_rate(a), 1.0 - binary_entropy((1 + a) / 2), 1e-12);
    }
    EXPECT_THROW(key_rate(-0.1), InvalidParameter);
    EXPECT_THROW(key_rate(1.1), InvalidParameter);
}

TEST(MutualInformation, PlugInEstimator) {
    const BitString balanced{0, 1, 0, 1, 1, 0};
    EXPECT_NEAR(empirical_mutual_information(balanced, balanced), 1.0, 1e-15);
    const BitString skewed{0, 0, 0, 1};
    EXPECT_NEAR(empirical_mutual_information(skewed, skewed), binary_entropy(0.25), 1e-15);

    std::mt19937_64 rng(5);
    BitString a(1'000'000), b(1'000'000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::uint8_t(rng() & 1u);
        b[i] = std::uint8_t(rng() & 1u);
    }
    EXPECT_LT(empirical_mutual_information(a, b), 0.001);
    EXPECT_THROW(empirical_mutual_information({}, {}), InsufficientData);
    EXPECT_THROW(empirical_mutual_information(BitString{1}, BitString{1, 0}), DimensionMismatch);
}

TEST(SecurityMask, ExactSizeAndDeterministic) {
    const auto m1 = security_mask(9, 10007, 5000);
    const auto m2 = security_mask(9, 10007, 5000);
    EXPECT_EQ(m1, m2);
    EXPECT_EQ(std::count(m1.begin(), m1.end(), 1), 5000);
    EXPECT_NE(security_mask(10, 10007, 5000), m1);
    EXPECT_THROW(security_mask(1, 5, 6), InvalidParameter);
}

TEST(Rounds, IndependentOfThreadCount) {
    auto c = small_config(0.73, 50'000, 123);
    EXPECT_EQ(generate_rounds(c, 1), generate_rounds(c, 3));
    // Any sub-range reproduces the same records.
    const RoundSimulator sim(deployed_state(c), c.seed);
    const auto full = sim.generate(0, 1000, {});
    const auto tail = sim.generate(600, 400, {});
    EXPECT_TRUE(std::equal(tail.begin(), tail.end(), full.begin() + 600));
}

TEST(Rounds, KeyRoleImpliesSiftable) {
    const auto records = generate_rounds(small_config(0.73, 20'000, 3));
    std::size_t security = 0;
    for (const auto& r : records) {
        if (r.role == RoundRole::key) EXPECT_TRUE(sift_predicate(r, 6));
        if (r.role == RoundRole::security) ++security;
        EXPECT_EQ(r.outcome.a * r.outcome.a, 1);
        EXPECT_LE(std::abs(r.outcome.two_m), 6);
    }
    EXPECT_EQ(security, 10'000u);
}

TEST(Rounds, SiftYieldMatchesClosedForm) {
    const auto c = small_config(0.73, 400'000, 8);
    const auto records = generate_rounds(c);
    const RoundSimulator sim(deployed_state(c), c.seed);
    // P(matched) P(|m| = S | matched) from the Born-rule tables: (X,X) is (0,0), (XZ,XZ) is (1,1).
    double extremal = 0.0;
    for (std::size_t k : {0u, 1u}) {
        const auto& t = sim.table(k, k);
        extremal += 0.5 * (t.prob(-1, 6) + t.prob(1, 6) + t.prob(-1, -6) + t.prob(1, -6));
    }
    const double p = (2.0 / 9.0) * extremal;
    const double n = double(c.n_rounds - security_round_count(c));
    const double kept = double(sift(records, c.two_s).alice_bits.size());
    EXPECT_LT(std::abs(kept - n * p), 3 * std::sqrt(n * p * (1 - p)));
}

TEST(Rounds, DecodedErrorFractionTracksAlpha) {
    const auto c = small_config(0.73, 3'400'000, 21);
    const RoundSimulator sim(deployed_state(c), c.seed);
    const auto key = sift(sim.generate(0, c.n_rounds, {}), c.two_s);
    ASSERT_GE(key.alice_bits.size(), 100'000u);
    std::mt19937_64 rng(4);
    BitString message(key.alice_bits.size());
    for (auto& b : message) b = std::uint8_t(rng() & 1u);
    const auto decoded = decode_message(encode_message(message, key.alice_bits), key.bob_bits);
    EXPECT_NEAR(bit_error_fraction(decoded, message), 0.135, 0.01);
    EXPECT_NEAR(empirical_mutual_information(key.alice_bits, key.bob_bits), key_rate(0.73), 0.01);
}

TEST(Session, PerfectCorrelationDeliversMessage) {
    auto c = small_config(1.0, 10'000, 5);
    c.message = {1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1};
    const auto t = run_session(c);
    ASSERT_FALSE(t.aborted) << t.abort_reason;
    EXPECT_EQ(t.decoded, c.message);
    EXPECT_EQ(*t.qber, 0.0);
    EXPECT_EQ(t.message_bit_errors, 0u);
    EXPECT_EQ(t.rounds.size(), c.n_rounds);
    for (std::size_t i = 0; i < t.rounds.size(); ++i) EXPECT_EQ(t.rounds[i].index, i);
}

TEST(Session, DefaultRegimePassesAndMatchesQber) {
    // 8e5 security rounds: at 1e5 total rounds the z = 3 gate passes only ~10% of the time.
    auto c = small_config(0.73, 1'000'000, 12);
    c.security_fraction = 0.8;
    const auto t = run_session(c);
    ASSERT_FALSE(t.aborted) << t.abort_reason;
    EXPECT_TRUE(t.verdict->passed);
    EXPECT_NEAR(*t.qber, (1 - 0.73) / 2, 0.01);
    EXPECT_NEAR(*t.key_rate_formula, key_rate(0.73), 0.0);
}

TEST(Session, IdenticalSeedsIdenticalTranscripts) {
    auto c = small_config(0.8, 60'000, 77);
    c.message = {1, 0, 1};
    const auto a = run_session(c, 1);
    const auto b = run_session(c, 2);
    EXPECT_EQ(a.rounds, b.rounds);
    EXPECT_EQ(a.alice_key, b.alice_key);
    EXPECT_EQ(a.bob_key, b.bob_key);
    EXPECT_EQ(a.decoded, b.decoded);
    EXPECT_EQ(a.chsh->value, b.chsh->value);
}

TEST(Session, InterceptResendAbortsWithoutKeyMaterial) {
    auto c = small_config(0.73, 20'000, 2);
    c.eve.kind = EveKind::intercept_xz;
    c.message = {1, 1, 0};
    const auto t = run_session(c);
    EXPECT_TRUE(t.aborted);
    EXPECT_FALSE(t.verdict->passed);
    EXPECT_TRUE(t.alice_key.empty());
    EXPECT_TRUE(t.bob_key.empty());
    EXPECT_TRUE(t.transmitted.empty());
    EXPECT_TRUE(t.decoded.empty());
    EXPECT_FALSE(t.qber.has_value());
    for (const auto& r : t.rounds) EXPECT_NE(r.role, RoundRole::key);
}

TEST(Session, ShortfallReportsAchievableBits) {
    auto c = small_config(1.0, 10'000, 5);
    c.message = BitString(5000, 1);
    try {
        run_session(c);
        FAIL() << "expected KeyShortfall";
    } catch (const KeyShortfall& e) {
        EXPECT_GT(e.achievable(), 0u);
        EXPECT_LT(e.achievable(), 5000u);
        EXPECT_NE(std::string(e.what()).find(std::to_string(e.achievable())), std::string::npos);
    }
}

TEST(Session, ConfigValidation) {
    auto c = small_config(0.73, 3, 1);
    EXPECT_THROW(validate(c), InvalidParameter);
    c.n_rounds = 6;  // 0.5 * 6 < 4
    EXPECT_THROW(validate(c), InvalidParameter);
    c = small_config(-0.8, 1000, 1);
    EXPECT_THROW(validate(c), InvalidParameter);
    c = small_config(0.5, 1000, 1);
    c.security_fraction = 1.0;
    EXPECT_THROW(validate(c), InvalidParameter);
    c = small_config(0.5, 1000, 1);
    c.eve = {EveKind::depolarize, 2.0};
    EXPECT_THROW(validate(c), InvalidParameter);
    c = small_config(0.5, 1000, 1);
    c.message = {0, 2};
    EXPECT_THROW(validate(c), InvalidParameter);
}
