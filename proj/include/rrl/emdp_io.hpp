#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rrl/binary_io.hpp"
#include "rrl/emdp.hpp"
#include "rrl/rationality.hpp"

namespace rrl::io {

/// Shortest decimal that reads back to the same double.
inline std::string exact(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
T parse_number(std::string_view tok, std::size_t line_no, const char* what) {
    T v{};
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size())
        throw FormatError("line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(tok) + "'");
    return v;
}

}  // namespace detail

// Text format:
//   EMDP v1 S A H
//   METRIC_FAMILY discrete        (pairs without a METRIC line are at distance 1)
//   SINK s                        (only for absorbing-form EMDPs)
//   INIT s prob
//   TRANS s a prob s' reward terminal
//   METRIC s s' d                 (s < s')
// Blank lines and lines starting with '#' are ignored.
inline void write_emdp(std::ostream& os, const TabularEMDP& m) {
    os << "EMDP v1 " << m.num_states << ' ' << m.num_actions << ' ' << m.horizon << '\n';
    os << "METRIC_FAMILY discrete\n";
    if (m.sink) os << "SINK " << *m.sink << '\n';
    for (StateId s = 0; s < m.num_states; ++s)
        if (m.initial_dist[s] != 0.0) os << "INIT " << s << ' ' << exact(m.initial_dist[s]) << '\n';
    for (StateId s = 0; s < m.num_states; ++s)
        for (ActionId a = 0; a < m.num_actions; ++a)
            for (const auto& o : m.row(s, a))
                os << "TRANS " << s << ' ' << a << ' ' << exact(o.probability) << ' ' << o.next_state << ' '
                   << exact(o.reward) << ' ' << (o.terminal ? 1 : 0) << '\n';
    for (StateId i = 0; i < m.num_states; ++i)
        for (StateId j = i + 1; j < m.num_states; ++j)
            if (m.metric(i, j) != 1.0) os << "METRIC " << i << ' ' << j << ' ' << exact(m.metric(i, j)) << '\n';
}

inline TabularEMDP read_emdp(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    TabularEMDP m;
    bool have_header = false;
    auto index = [&](std::string_view tok, std::size_t bound, const char* what) {
        const auto v = detail::parse_number<std::size_t>(tok, line_no, what);
        if (v >= bound)
            throw FormatError("line " + std::to_string(line_no) + ": " + what + " " + std::to_string(v) +
                              " out of range");
        return v;
    };
    while (std::getline(is, line)) {
        ++line_no;
        const auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        auto need = [&](std::size_t n) {
            if (tok.size() != n)
                throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(n) +
                                  " fields for " + std::string(tok[0]));
        };
        if (!have_header) {
            if (tok.size() != 5 || tok[0] != "EMDP" || tok[1] != "v1")
                throw FormatError("line " + std::to_string(line_no) + ": expected header 'EMDP v1 S A H'");
            const auto S = detail::parse_number<std::size_t>(tok[2], line_no, "state count");
            const auto A = detail::parse_number<std::size_t>(tok[3], line_no, "action count");
            const auto H = detail::parse_number<std::size_t>(tok[4], line_no, "horizon");
            if (S == 0 || A == 0 || H == 0) throw FormatError("header: S, A and H must be positive");
            m = TabularEMDP(S, A, H);
            have_header = true;
        } else if (tok[0] == "METRIC_FAMILY") {
            need(2);
            if (tok[1] != "discrete")
                throw FormatError("line " + std::to_string(line_no) + ": unknown metric family '" +
                                  std::string(tok[1]) + "'");
        } else if (tok[0] == "SINK") {
            need(2);
            m.sink = index(tok[1], m.num_states, "state");
        } else if (tok[0] == "INIT") {
            need(3);
            m.initial_dist[index(tok[1], m.num_states, "state")] +=
                detail::parse_number<double>(tok[2], line_no, "probability");
        } else if (tok[0] == "TRANS") {
            need(7);
            const auto s = index(tok[1], m.num_states, "state");
            const auto a = index(tok[2], m.num_actions, "action");
            Outcome o;
            o.probability = detail::parse_number<double>(tok[3], line_no, "probability");
            o.next_state = index(tok[4], m.num_states, "next state");
            o.reward = detail::parse_number<double>(tok[5], line_no, "reward");
            const auto t = detail::parse_number<int>(tok[6], line_no, "terminal flag");
            if (t != 0 && t != 1) throw FormatError("line " + std::to_string(line_no) + ": terminal flag must be 0 or 1");
            o.terminal = t == 1;
            m.row(s, a).push_back(o);
        } else if (tok[0] == "METRIC") {
            need(4);
            const auto i = index(tok[1], m.num_states, "state");
            const auto j = index(tok[2], m.num_states, "state");
            if (i == j) throw FormatError("line " + std::to_string(line_no) + ": METRIC on the diagonal");
            m.metric.set(i, j, detail::parse_number<double>(tok[3], line_no, "distance"));
        } else {
            throw FormatError("line " + std::to_string(line_no) + ": unknown record '" + std::string(tok[0]) + "'");
        }
    }
    if (!have_header) throw FormatError("empty EMDP file");
    return m;
}

inline void save_emdp(const TabularEMDP& m, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_emdp(os, m);
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

inline TabularEMDP load_emdp(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open EMDP file " + path.string());
    try {
        return read_emdp(is);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline constexpr std::array<char, 4> kQTensorMagic{'R', 'Q', 'T', '1'};
inline constexpr std::array<char, 4> kPolicyMagic{'R', 'P', 'L', '1'};

inline void write_qtensor(std::ostream& os, const QTensor& q) {
    os.write(kQTensorMagic.data(), 4);
    write_u32(os, static_cast<std::uint32_t>(q.horizon()));
    write_u32(os, static_cast<std::uint32_t>(q.num_states()));
    write_u32(os, static_cast<std::uint32_t>(q.num_actions()));
    for (double x : q.data()) write_f64(os, x);
}

inline QTensor read_qtensor(std::istream& is) {
    LittleEndianReader in(is, "Q tensor");
    in.expect_magic(kQTensorMagic);
    const auto H = in.u32(), S = in.u32(), A = in.u32();
    QTensor q(H, S, A);
    for (double& x : q.data()) x = in.f64();
    in.expect_end();
    return q;
}

// Policy table: magic, u32 H, S, A, u32 stationary flag, then the stored rows.
inline void write_policy(std::ostream& os, const TabularPolicy& pi) {
    os.write(kPolicyMagic.data(), 4);
    write_u32(os, static_cast<std::uint32_t>(pi.horizon()));
    write_u32(os, static_cast<std::uint32_t>(pi.num_states()));
    write_u32(os, static_cast<std::uint32_t>(pi.num_actions()));
    write_u32(os, pi.stationary() ? 1u : 0u);
    const std::size_t steps = pi.stationary() ? 1 : pi.horizon();
    for (std::size_t h = 0; h < steps; ++h)
        for (StateId s = 0; s < pi.num_states(); ++s)
            for (double p : pi.row(h, s)) write_f64(os, p);
}

inline TabularPolicy read_policy(std::istream& is) {
    LittleEndianReader in(is, "policy");
    in.expect_magic(kPolicyMagic);
    const auto H = in.u32(), S = in.u32(), A = in.u32(), stationary = in.u32();
    TabularPolicy pi(H, S, A, stationary != 0);
    const std::size_t steps = pi.stationary() ? 1 : H;
    for (std::size_t h = 0; h < steps; ++h)
        for (StateId s = 0; s < S; ++s)
            for (double& p : pi.row(h, s)) p = in.f64();
    in.expect_end();
    return pi;
}

template <class T, class Write>
void save_binary(const T& value, const std::filesystem::path& path, Write write) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write(os, value);
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

template <class Read>
auto load_binary(const std::filesystem::path& path, Read read) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read(is);
}

/// Visited-state log as CSV `episode,h,state` with 1-based episode and step.
inline void write_visited_csv(std::ostream& os, const VisitedStates& v) {
    os << "episode,h,state\n";
    for (std::size_t t = 0; t < v.episodes(); ++t)
        for (std::size_t h = 0; h < v.horizon(); ++h) os << t + 1 << ',' << h + 1 << ',' << v.at(t, h) << '\n';
}

inline VisitedStates read_visited_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("episode,h,state", 0) != 0)
        throw FormatError("visited-state log: missing header 'episode,h,state'");
    std::vector<std::vector<StateId>> episodes;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw FormatError("visited-state log line " + std::to_string(line_no) + ": expected 3 fields");
        if (!c.empty() && c.back() == '\r') c.pop_back();
        const auto ep = detail::parse_number<std::size_t>(a, line_no, "episode");
        const auto h = detail::parse_number<std::size_t>(b, line_no, "step");
        const auto s = detail::parse_number<std::size_t>(c, line_no, "state");
        if (ep == 0 || h == 0) throw FormatError("visited-state log: episode and step are 1-based");
        if (ep > episodes.size()) episodes.resize(ep);
        auto& e = episodes[ep - 1];
        if (h != e.size() + 1)
            throw FormatError("visited-state log line " + std::to_string(line_no) + ": steps out of order");
        e.push_back(s);
    }
    if (episodes.empty()) throw FormatError("visited-state log: no episodes");
    VisitedStates v(episodes.front().size());
    for (const auto& e : episodes) v.add_episode(e);
    return v;
}

inline void write_returns_csv(std::ostream& os, const std::vector<double>& returns,
                              const std::vector<double>& challenge) {
    os << "episode,return,challenge_eps\n";
    for (std::size_t t = 0; t < returns.size(); ++t)
        os << t + 1 << ',' << exact(returns[t]) << ',' << exact(challenge.at(t)) << '\n';
}

}  // namespace rrl::io
