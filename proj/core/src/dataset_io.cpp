#include "ivope/dataset_io.hpp"

#include "ivope/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace ivope {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, int line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("invalid number '" + std::string(s) + "'", line);
    return v;
}

long parse_int(std::string_view s, int line) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("invalid integer '" + std::string(s) + "'", line);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    data.validate();
    out << "episode,t";
    for (int j = 0; j < data.state_dim; ++j) out << ",s_" << j;
    out << ",z,a,r\n";
    for (int i = 0; i < data.size(); ++i) {
        const auto& tr = data.trajectories[i];
        const int T = tr.horizon();
        for (int t = 0; t <= T; ++t) {
            out << i << ',' << t;
            for (int j = 0; j < data.state_dim; ++j) out << ',' << format_double(tr.states(t, j));
            if (t < T)
                out << ',' << tr.ivs[t] << ',' << tr.actions[t] << ',' << format_double(tr.rewards[t]) << '\n';
            else
                out << ",,,\n";
        }
    }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_dataset_csv(out, data);
}

Dataset read_dataset_csv(std::istream& in, std::optional<bool> discrete) {
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line)) throw ParseError("missing header row", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.size() < 6 || header[0] != "episode" || header[1] != "t" || header[header.size() - 3] != "z" ||
        header[header.size() - 2] != "a" || header.back() != "r")
        throw ParseError("header must be episode,t,s_0..s_{d-1},z,a,r", 1);
    const int d = static_cast<int>(header.size()) - 5;
    for (int j = 0; j < d; ++j)
        if (header[2 + j] != "s_" + std::to_string(j)) throw ParseError("unexpected state column name", 1);

    struct Row {
        std::vector<double> s;
        bool terminal;
        int z, a;
        double r;
    };
    std::vector<std::vector<Row>> episodes;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (static_cast<int>(f.size()) != d + 5) throw ParseError("wrong number of fields", lineno);
        const long ep = parse_int(f[0], lineno);
        const long t = parse_int(f[1], lineno);
        if (ep < 0 || ep > static_cast<long>(episodes.size())) throw ParseError("episodes must be numbered consecutively", lineno);
        if (ep == static_cast<long>(episodes.size())) episodes.emplace_back();
        auto& rows = episodes[ep];
        if (t != static_cast<long>(rows.size())) throw ParseError("time steps must be consecutive from 0", lineno);
        if (!rows.empty() && rows.back().terminal) throw ParseError("row after terminal state", lineno);
        Row row;
        row.s.resize(d);
        for (int j = 0; j < d; ++j) row.s[j] = parse_double(f[2 + j], lineno);
        row.terminal = f[d + 2].empty() && f[d + 3].empty() && f[d + 4].empty();
        row.z = row.a = 0;
        row.r = 0.0;
        if (!row.terminal) {
            row.z = static_cast<int>(parse_int(f[d + 2], lineno));
            row.a = static_cast<int>(parse_int(f[d + 3], lineno));
            row.r = parse_double(f[d + 4], lineno);
        }
        rows.push_back(std::move(row));
    }

    Dataset data;
    data.state_dim = d;
    bool all_codes = d == 1;
    for (const auto& rows : episodes) {
        if (rows.empty() || !rows.back().terminal) throw ParseError("episode without terminal state row", lineno);
        Trajectory tr;
        const int T = static_cast<int>(rows.size()) - 1;
        tr.states.resize(T + 1, d);
        for (int t = 0; t <= T; ++t) {
            for (int j = 0; j < d; ++j) {
                tr.states(t, j) = rows[t].s[j];
                if (rows[t].s[j] < 0 || rows[t].s[j] != std::floor(rows[t].s[j])) all_codes = false;
            }
            if (t < T) {
                tr.ivs.push_back(rows[t].z);
                tr.actions.push_back(rows[t].a);
                tr.rewards.push_back(rows[t].r);
            }
        }
        data.trajectories.push_back(std::move(tr));
    }
    data.discrete = discrete.value_or(all_codes);
    data.validate();
    return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path, std::optional<bool> discrete) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read_dataset_csv(in, discrete);
}

}  // namespace ivope
