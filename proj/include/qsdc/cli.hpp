#pragma once

// Config ingestion, subcommand dispatch and report rendering for the qsdc tool.
// Reports are nlohmann::ordered_json objects, so key order is fixed by the code
// and identical inputs render to identical bytes.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qsdc/chsh.hpp"
#include "qsdc/equivalence.hpp"
#include "qsdc/protocol.hpp"
#include "qsdc/state.hpp"

namespace qsdc::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Bits and hex

inline BitString hex_to_bits(std::string_view hex) {
    BitString bits;
    bits.reserve(hex.size() * 4);
    for (char ch : hex) {
        int v;
        if (ch >= '0' && ch <= '9') v = ch - '0';
        else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
        else throw InvalidParameter(std::string("message_hex: '") + ch + "' is not a hex digit");
        for (int b = 3; b >= 0; --b) bits.push_back(std::uint8_t((v >> b) & 1));
    }
    return bits;
}

/// MSB-first nibbles; a trailing partial nibble is zero-padded on the right.
inline std::string bits_to_hex(std::span<const std::uint8_t> bits) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve((bits.size() + 3) / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        int v = 0;
        for (std::size_t b = 0; b < 4; ++b) v = (v << 1) | (i + b < bits.size() ? (bits[i + b] & 1) : 0);
        out.push_back(kDigits[v]);
    }
    return out;
}

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------
// Config

inline std::string_view eve_name(EveKind kind) {
    switch (kind) {
        case EveKind::none: return "none";
        case EveKind::intercept_x: return "intercept-x";
        case EveKind::intercept_xz: return "intercept-xz";
        case EveKind::depolarize: return "depolarize";
    }
    return "none";
}

inline EveKind parse_eve(std::string_view name) {
    if (name == "none") return EveKind::none;
    if (name == "intercept-x") return EveKind::intercept_x;
    if (name == "intercept-xz") return EveKind::intercept_xz;
    if (name == "depolarize") return EveKind::depolarize;
    throw InvalidParameter("eve: unknown model '" + std::string(name) +
                           "' (expected none, intercept-x, intercept-xz or depolarize)");
}

inline const std::set<std::string, std::less<>>& config_keys() {
    static const std::set<std::string, std::less<>> keys{
        "two_s", "alpha", "n_rounds", "security_fraction", "chsh_threshold",
        "chsh_z", "eve", "eve_q", "seed", "message_hex"};
    return keys;
}

/// Flat `key = value` text; `#` starts a comment. Unknown or repeated keys are errors.
inline std::map<std::string, std::string, std::less<>> parse_key_values(std::string_view text) {
    std::map<std::string, std::string, std::less<>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidParameter("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!config_keys().contains(key)) {
            throw InvalidParameter("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (out.contains(key)) {
            throw InvalidParameter("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        out.emplace(std::move(key), std::move(value));
    }
    return out;
}

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw InvalidParameter(std::string(key) + ": cannot parse '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace detail

/// Command-line values; any that are set win over the config file.
struct ConfigOverrides {
    std::optional<int> two_s;
    std::optional<double> alpha;
    std::optional<std::uint64_t> n_rounds;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> eve;
    std::optional<double> eve_q;
    std::optional<std::string> message_hex;
};

inline SessionConfig parse_config(std::string_view file_text, const ConfigOverrides& flags,
                                  bool require_rounds = true) {
    const auto kv = parse_key_values(file_text);
    SessionConfig c;
    std::string message_hex;
    auto get = [&](std::string_view key) -> std::optional<std::string_view> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return std::string_view(it->second);
    };
    using detail::parse_number;
    if (auto v = get("two_s")) c.two_s = parse_number<int>("two_s", *v);
    if (auto v = get("alpha")) c.alpha = parse_number<double>("alpha", *v);
    if (auto v = get("n_rounds")) c.n_rounds = parse_number<std::uint64_t>("n_rounds", *v);
    if (auto v = get("security_fraction")) c.security_fraction = parse_number<double>("security_fraction", *v);
    if (auto v = get("chsh_threshold")) c.chsh_threshold = parse_number<double>("chsh_threshold", *v);
    if (auto v = get("chsh_z")) c.chsh_z = parse_number<double>("chsh_z", *v);
    if (auto v = get("eve")) c.eve.kind = parse_eve(*v);
    if (auto v = get("eve_q")) c.eve.q = parse_number<double>("eve_q", *v);
    if (auto v = get("seed")) c.seed = parse_number<std::uint64_t>("seed", *v);
    if (auto v = get("message_hex")) message_hex = std::string(*v);

    if (flags.two_s) c.two_s = *flags.two_s;
    if (flags.alpha) c.alpha = *flags.alpha;
    if (flags.n_rounds) c.n_rounds = *flags.n_rounds;
    if (flags.seed) c.seed = *flags.seed;
    if (flags.eve) c.eve.kind = parse_eve(*flags.eve);
    if (flags.eve_q) c.eve.q = *flags.eve_q;
    if (flags.message_hex) message_hex = *flags.message_hex;

    if (c.eve.kind != EveKind::depolarize && c.eve.q != 0.0) {
        throw InvalidParameter("eve_q: only meaningful with eve = depolarize");
    }
    c.message = hex_to_bits(message_hex);
    validate(c, require_rounds);
    return c;
}

inline SessionConfig load_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& flags,
                                 bool require_rounds = true) {
    std::string text;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw InvalidParameter("config: cannot read '" + path->string() + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    return parse_config(text, flags, require_rounds);
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Canonical key=value lines in sorted key order; independent of how the
/// config was spelled.
inline std::string canonical_config(const SessionConfig& c) {
    std::map<std::string, std::string> fields{
        {"alpha", format_double(c.alpha)},
        {"chsh_threshold", format_double(c.chsh_threshold)},
        {"chsh_z", format_double(c.chsh_z)},
        {"eve", std::string(eve_name(c.eve.kind))},
        {"eve_q", format_double(c.eve.q)},
        {"message_bits", std::to_string(c.message.size())},
        {"message_hex", bits_to_hex(c.message)},
        {"n_rounds", std::to_string(c.n_rounds)},
        {"security_fraction", format_double(c.security_fraction)},
        {"seed", std::to_string(c.seed)},
        {"two_s", std::to_string(c.two_s)},
    };
    std::string out;
    for (const auto& [k, v] : fields) out += k + "=" + v + "\n";
    return out;
}

inline std::string config_hash(const SessionConfig& c) { return hex64(fnv1a(canonical_config(c))); }

inline Json config_json(const SessionConfig& c) {
    return Json{{"two_s", c.two_s},
                {"alpha", c.alpha},
                {"n_rounds", c.n_rounds},
                {"security_fraction", c.security_fraction},
                {"chsh_threshold", c.chsh_threshold},
                {"chsh_z", c.chsh_z},
                {"eve", eve_name(c.eve.kind)},
                {"eve_q", c.eve.q},
                {"seed", c.seed},
                {"message_bits", c.message.size()},
                {"message_hex", bits_to_hex(c.message)}};
}

// ---------------------------------------------------------------------------
// Reports

struct RunReport {
    std::string command;
    std::string config_hash;
    Json payload;
    std::string tool_version{kToolVersion};
    double wall_clock_seconds = 0.0;
    Json config;
};

struct CommandParams {
    std::string command;
    SessionConfig config;
    int grid = 200;
    double step = 0.01;
    unsigned threads = 1;
};

struct CommandOutput {
    RunReport report;
    std::string csv;
};

inline bool all_numbers_finite(const Json& j) {
    if (j.is_number_float()) return std::isfinite(j.get<double>());
    if (j.is_structured()) {
        for (const auto& item : j) {
            if (!all_numbers_finite(item)) return false;
        }
    }
    return true;
}

inline std::string render_json(const RunReport& r, bool include_timing = false) {
    Json doc{{"command", r.command},
             {"tool_version", r.tool_version},
             {"config_hash", r.config_hash},
             {"config", r.config},
             {"results", r.payload}};
    if (include_timing) doc["wall_clock_seconds"] = r.wall_clock_seconds;
    return doc.dump(2) + "\n";
}

inline Json estimate_json(const ChshEstimate& e) {
    return Json{{"value", e.value},
                {"std_error", e.std_error},
                {"counts", e.counts},
                {"correlators", e.correlators}};
}

inline Json verdict_json(const SecurityVerdict& v) {
    return Json{{"decision", v.passed ? "pass" : "fail"},
                {"threshold", v.threshold},
                {"z", v.z},
                {"lower_bound", v.lower_bound},
                {"margin", v.margin}};
}

namespace detail {

inline double ppt_tolerance() { return 1e-10; }

inline std::string csv_line(std::initializer_list<std::string> cells) {
    std::string out;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) out += ',';
        out += c;
        first = false;
    }
    return out + "\n";
}

inline CommandOutput run_equivalence(const CommandParams& p) {
    const auto small = werner_2x2(p.config.alpha);
    const auto large = werner_equivalent(p.config.alpha, p.config.two_s);
    const auto grid = sphere_grid(p.grid);
    const auto rows = q_comparison_table(small, large, grid);
    double distance = 0.0, q_min = rows.front().q_small, q_max = rows.front().q_small;
    std::string csv = "thetaA,phiA,thetaB,phiB,q_small,q_large,abs_diff\n";
    for (const auto& r : rows) {
        distance = std::max(distance, r.abs_diff());
        q_min = std::min(q_min, r.q_small);
        q_max = std::max(q_max, r.q_small);
        csv += csv_line({format_double(r.na.theta()), format_double(r.na.phi()), format_double(r.nb.theta()),
                         format_double(r.nb.phi()), format_double(r.q_small), format_double(r.q_large),
                         format_double(r.abs_diff())});
    }
    constexpr double kTolerance = 1e-10;
    CommandOutput out;
    out.report.payload = Json{{"alpha", p.config.alpha},
                              {"two_s", p.config.two_s},
                              {"grid_nodes", p.grid},
                              {"pairs", rows.size()},
                              {"distance", distance},
                              {"tolerance", kTolerance},
                              {"equivalent", distance < kTolerance},
                              {"q_small_min", q_min},
                              {"q_small_max", q_max}};
    out.csv = std::move(csv);
    return out;
}

inline CommandOutput run_entanglement_scan(const CommandParams& p) {
    if (!(p.step > 0.0 && p.step <= 1.0)) throw InvalidParameter("step: must lie in (0, 1]");
    const int two_s = p.config.two_s;
    const auto range = werner_equivalent_range(two_s);
    const auto range_2x2 = werner_2x2_range();
    const double s = 0.5 * two_s;
    const long first = long(std::ceil(range.lower / p.step - 1e-9));
    const long last = long(std::floor(1.0 / p.step + 1e-9));

    Json sweep = Json::array();
    std::string csv = "alpha,min_pt_eigenvalue,ppt,min_pt_eigenvalue_2x2,ppt_2x2\n";
    std::optional<double> crossover, crossover_2x2;
    for (long k = first; k <= last; ++k) {
        const double alpha = double(k) * p.step;
        const double pt = min_partial_transpose_eigenvalue(werner_equivalent(alpha, two_s));
        const bool ppt = pt >= -ppt_tolerance();
        if (ppt) crossover = alpha;
        Json row{{"alpha", alpha}, {"min_pt_eigenvalue", pt}, {"ppt", ppt}};
        std::string pt2_cell, ppt2_cell;
        if (range_2x2.contains(alpha)) {
            const double pt2 = min_partial_transpose_eigenvalue(werner_2x2(alpha));
            const bool ppt2 = pt2 >= -ppt_tolerance();
            if (ppt2) crossover_2x2 = alpha;
            row["min_pt_eigenvalue_2x2"] = pt2;
            row["ppt_2x2"] = ppt2;
            pt2_cell = format_double(pt2);
            ppt2_cell = ppt2 ? "1" : "0";
        }
        csv += csv_line({format_double(alpha), format_double(pt), ppt ? "1" : "0", pt2_cell, ppt2_cell});
        sweep.push_back(std::move(row));
    }
    CommandOutput out;
    out.report.payload = Json{{"two_s", two_s},
                              {"step", p.step},
                              {"ppt_tolerance", ppt_tolerance()},
                              {"ppt_boundary_closed_form", s / (s + 1.0)},
                              {"ppt_crossover", crossover ? Json(*crossover) : Json(nullptr)},
                              {"ppt_boundary_closed_form_2x2", 1.0 / 3.0},
                              {"ppt_crossover_2x2", crossover_2x2 ? Json(*crossover_2x2) : Json(nullptr)},
                              {"classification_rule", "ppt => separable range; the boundary point is reported as ppt"},
                              {"sweep", std::move(sweep)}};
    out.csv = std::move(csv);
    return out;
}

inline CommandOutput run_chsh(const CommandParams& p) {
    const auto& c = p.config;
    const auto deployed = deployed_state(c);
    const auto settings = ChshSettings::optimal();
    Json payload{{"alpha", c.alpha},
                 {"two_s", c.two_s},
                 {"eve", eve_name(c.eve.kind)},
                 {"exact", chsh_exact(deployed, settings)},
                 {"classical_bound", 2.0},
                 {"rounds", c.n_rounds}};
    if (c.eve.kind == EveKind::none) {
        payload["exact_2x2_reference"] = chsh_2x2_reference(werner_2x2(c.alpha), settings);
    }
    std::string csv = "pair,alice,bob,count,correlator\n";
    if (c.n_rounds == 0) {
        payload["estimate"] = nullptr;
    } else {
        const RoundSimulator sim(deployed, c.seed);
        const std::vector<std::uint8_t> all_security(c.n_rounds, 1);
        const auto records = sim.generate(0, c.n_rounds, all_security, p.threads);
        const auto est = chsh_estimate(records, settings, c.two_s);
        Json e = estimate_json(est);
        e["verdict"] = verdict_json(security_decision(est, c.chsh_threshold, c.chsh_z));
        payload["estimate"] = std::move(e);
        static constexpr const char* kPairs[4][2] = {{"X", "XZ"}, {"X", "X-Z"}, {"Z", "XZ"}, {"Z", "X-Z"}};
        for (std::size_t k = 0; k < 4; ++k) {
            csv += csv_line({std::to_string(k), kPairs[k][0], kPairs[k][1], std::to_string(est.counts[k]),
                             format_double(est.correlators[k])});
        }
    }
    CommandOutput out;
    out.report.payload = std::move(payload);
    out.csv = std::move(csv);
    return out;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::string records_digest(std::span<const RoundRecord> rounds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& r : rounds) {
        const std::string line = std::to_string(r.index) + ',' + std::to_string(int(r.alice)) + ',' +
                                 std::to_string(int(r.bob)) + ',' + std::to_string(r.outcome.a) + ',' +
                                 std::to_string(r.outcome.two_m) + ',' + std::to_string(int(r.role)) + ';';
        h = fnv1a(line, h);
    }
    return hex64(h);
}

}  // namespace detail

/// Summary of a transcript. Rounds are represented by counts and a digest; the
/// full per-round table goes to the CSV form.
inline Json transcript_json(const SessionTranscript& t) {
    std::array<std::uint64_t, 3> roles{};
    for (const auto& r : t.rounds) ++roles[std::size_t(r.role)];
    Json j{{"aborted", t.aborted},
           {"abort_reason", t.abort_reason},
           {"rounds", {{"total", t.rounds.size()},
                       {"security", roles[0]},
                       {"key", roles[1]},
                       {"discarded", roles[2]},
                       {"digest", detail::records_digest(t.rounds)}}},
           {"chsh_exact_deployed", t.chsh_exact_deployed},
           {"chsh_estimate", t.chsh ? estimate_json(*t.chsh) : Json(nullptr)},
           {"security", t.verdict ? verdict_json(*t.verdict) : Json(nullptr)},
           {"sifted_key_bits", t.alice_key.size()},
           {"sift_yield", t.rounds.empty() ? 0.0 : double(t.alice_key.size()) / double(t.rounds.size())},
           {"alice_key_hex", bits_to_hex(t.alice_key)},
           {"bob_key_hex", bits_to_hex(t.bob_key)},
           {"transmitted_bits", t.transmitted.size()},
           {"transmitted_hex", bits_to_hex(t.transmitted)},
           {"decoded_hex", bits_to_hex(t.decoded)},
           {"message_bit_errors", t.message_bit_errors},
           {"qber", detail::optional_json(t.qber)},
           {"qber_closed_form", (1.0 - t.config.alpha) / 2.0},
           {"key_rate_formula", detail::optional_json(t.key_rate_formula)},
           {"mutual_info_empirical", detail::optional_json(t.mutual_info_empirical)}};
    return j;
}

inline std::string transcript_csv(const SessionTranscript& t) {
    std::string csv = "index,alice,bob,a,two_m,role\n";
    for (const auto& r : t.rounds) {
        csv += std::to_string(r.index) + ',' + std::string(to_string(r.alice)) + ',' + std::string(to_string(r.bob)) +
               ',' + std::to_string(r.outcome.a) + ',' + std::to_string(r.outcome.two_m) + ',' +
               std::string(to_string(r.role)) + '\n';
    }
    return csv;
}

namespace detail {

inline CommandOutput run_session_command(const CommandParams& p) {
    const auto t = run_session(p.config, p.threads);
    CommandOutput out;
    out.report.payload = transcript_json(t);
    out.csv = transcript_csv(t);
    return out;
}

inline CommandOutput run_keyrate(const CommandParams& p) {
    const double alpha = p.config.alpha;
    Json curve = Json::array();
    std::string csv = "alpha,key_rate,qber\n";
    for (int k = 0; k <= 100; ++k) {
        const double a = k / 100.0;
        const double rate = key_rate(a);
        curve.push_back(Json{{"alpha", a}, {"key_rate", rate}});
        csv += csv_line({format_double(a), format_double(rate), format_double((1.0 - a) / 2.0)});
    }
    CommandOutput out;
    out.report.payload = Json{{"alpha", alpha},
                              {"key_rate", key_rate(alpha)},
                              {"qber", (1.0 - alpha) / 2.0},
                              {"binary_entropy_check", 1.0 - binary_entropy((1.0 + alpha) / 2.0)},
                              {"curve", std::move(curve)}};
    out.csv = std::move(csv);
    return out;
}

}  // namespace detail

inline const std::set<std::string, std::less<>>& subcommands() {
    static const std::set<std::string, std::less<>> names{"equivalence", "entanglement-scan", "chsh", "session",
                                                          "keyrate"};
    return names;
}

/// Runs one subcommand. Module errors propagate as exceptions.
inline CommandOutput dispatch(const CommandParams& p) {
    const auto start = std::chrono::steady_clock::now();
    CommandOutput out;
    if (p.command == "equivalence") out = detail::run_equivalence(p);
    else if (p.command == "entanglement-scan") out = detail::run_entanglement_scan(p);
    else if (p.command == "chsh") out = detail::run_chsh(p);
    else if (p.command == "session") out = detail::run_session_command(p);
    else if (p.command == "keyrate") out = detail::run_keyrate(p);
    else throw InvalidParameter("unknown subcommand '" + p.command + "'");

    if (!all_numbers_finite(out.report.payload)) {
        throw std::runtime_error("dispatch: report contains a non-finite number");
    }
    out.report.command = p.command;
    out.report.config = config_json(p.config);
    out.report.config_hash = config_hash(p.config);
    out.report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace qsdc::cli
