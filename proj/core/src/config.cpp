#include "ivope/config.hpp"

#include "ivope/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ivope {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join(const Vector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt(v(i));
    }
    return s;
}

}  // namespace

KeyValueFile parse_key_value(std::istream& in, const std::string& source) {
    KeyValueFile file;
    file.source = source;
    std::string raw, section;
    int line = 0;
    std::set<std::pair<std::string, std::string>> seen;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw ParseError("unterminated section header", line);
            section = trim(text.substr(1, text.size() - 2));
            if (section.empty()) throw ParseError("empty section name", line);
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
        KeyValueEntry e{section, trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
        if (e.key.empty()) throw ParseError("missing key", line);
        if (!seen.insert({e.section, e.key}).second) throw ParseError("duplicate key '" + e.key + "'", line);
        file.entries.push_back(std::move(e));
    }
    return file;
}

KeyValueFile parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    return parse_key_value(in, path);
}

double parse_double(const std::string& text, int line) {
    const std::string t = trim(text);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (t.empty() || res.ec != std::errc() || res.ptr != last) throw ParseError("expected a number, got '" + t + "'", line);
    return v;
}

long long parse_int(const std::string& text, int line) {
    const std::string t = trim(text);
    long long v = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ParseError("expected an integer, got '" + t + "'", line);
    return v;
}

bool parse_bool(const std::string& text, int line) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ParseError("expected true/false, got '" + t + "'", line);
}

std::vector<double> parse_double_list(const std::string& text, int line) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_double(item, line));
    if (out.empty()) throw ParseError("empty list", line);
    return out;
}

std::vector<long long> parse_int_list(const std::string& text, int line) {
    std::vector<long long> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_int(item, line));
    if (out.empty()) throw ParseError("empty list", line);
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text, int line) {
    std::vector<std::string> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) throw ParseError("empty list item", line);
        out.push_back(item);
    }
    if (out.empty()) throw ParseError("empty list", line);
    return out;
}

AdCampaignParams parse_ad_campaign_params(const KeyValueFile& file) {
    AdCampaignParams p;
    auto to_vec = [](const std::vector<double>& v) {
        return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    std::set<std::string> got;
    std::vector<std::vector<double>> rows;
    for (const auto& e : file.entries) {
        if (!e.section.empty() && e.section != "ad_campaign")
            throw ParseError("unknown section '" + e.section + "'", e.line);
        got.insert(e.key);
        if (e.key == "state_dim") p.state_dim = static_cast<int>(parse_int(e.value, e.line));
        else if (e.key == "p_z") p.p_z = parse_double(e.value, e.line);
        else if (e.key == "beta_a") p.beta_a = to_vec(parse_double_list(e.value, e.line));
        else if (e.key == "beta_r") p.beta_r = to_vec(parse_double_list(e.value, e.line));
        else if (e.key == "sigma") p.sigma = to_vec(parse_double_list(e.value, e.line));
        else if (e.key == "u_action") p.u_action = parse_double(e.value, e.line);
        else if (e.key == "u_reward") p.u_reward = parse_double(e.value, e.line);
        else if (e.key == "u_state") p.u_state = to_vec(parse_double_list(e.value, e.line));
        else if (e.key == "transition") {
            for (const auto& r : split(e.value, ';'))
                if (!r.empty()) rows.push_back(parse_double_list(r, e.line));
        } else
            throw ParseError("unknown key '" + e.key + "'", e.line);
    }
    for (const char* k : {"state_dim", "p_z", "beta_a", "beta_r", "transition", "sigma", "u_state"})
        if (!got.count(k)) throw ParseError(std::string("missing key '") + k + "' in " + file.source, 0);
    const int cols = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    p.transition.resize(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) != cols) throw ParseError("ragged transition matrix", 0);
        for (int j = 0; j < cols; ++j) p.transition(static_cast<Eigen::Index>(i), j) = rows[i][j];
    }
    p.validate();
    return p;
}

AdCampaignParams load_ad_campaign_params(const std::string& path) {
    return parse_ad_campaign_params(parse_key_value_file(path));
}

void write_ad_campaign_params(std::ostream& out, const AdCampaignParams& p) {
    out << "state_dim = " << p.state_dim << '\n';
    out << "p_z = " << fmt(p.p_z) << '\n';
    out << "beta_a = " << join(p.beta_a) << '\n';
    out << "beta_r = " << join(p.beta_r) << '\n';
    out << "transition = ";
    for (Eigen::Index i = 0; i < p.transition.rows(); ++i) {
        if (i) out << "; ";
        out << join(p.transition.row(i).transpose());
    }
    out << '\n';
    out << "sigma = " << join(p.sigma) << '\n';
    out << "u_action = " << fmt(p.u_action) << '\n';
    out << "u_reward = " << fmt(p.u_reward) << '\n';
    out << "u_state = " << join(p.u_state) << '\n';
}

}  // namespace ivope
