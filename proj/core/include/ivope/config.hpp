#pragma once

#include "ivope/envs.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ivope {

/// Line-oriented `key = value` files with optional `[section]` headers and
/// `#` comments.
struct KeyValueEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

struct KeyValueFile {
    std::string source;
    std::vector<KeyValueEntry> entries;
};

KeyValueFile parse_key_value(std::istream& in, const std::string& source = "<stream>");
KeyValueFile parse_key_value_file(const std::string& path);

double parse_double(const std::string& text, int line);
long long parse_int(const std::string& text, int line);
bool parse_bool(const std::string& text, int line);
/// Comma-separated lists; surrounding whitespace is ignored.
std::vector<double> parse_double_list(const std::string& text, int line);
std::vector<long long> parse_int_list(const std::string& text, int line);
std::vector<std::string> parse_string_list(const std::string& text, int line);

/// AdCampaign parameter files. Keys: state_dim, p_z, beta_a, beta_r,
/// transition (rows separated by ';'), sigma, u_action, u_reward, u_state.
AdCampaignParams parse_ad_campaign_params(const KeyValueFile& file);
AdCampaignParams load_ad_campaign_params(const std::string& path);
void write_ad_campaign_params(std::ostream& out, const AdCampaignParams& p);

}  // namespace ivope
