#include "wfsep/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wfsep/error.hpp"

namespace wfsep {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool parse_number(std::string_view token, double& out) {
    std::string s(token);
    std::erase(s, '_');
    if (s.empty()) return false;
    std::size_t used = 0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size() && std::isfinite(out);
}

bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    for (char c : key)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    return key.front() != '.' && key.back() != '.';
}

}  // namespace

ConfigValue ConfigValue::parse(std::string_view token, bool allow_bare_text) {
    token = trim(token);
    ConfigValue v;
    if (token.empty()) throw ConfigError("missing value");
    if (token == "true" || token == "false") {
        v.kind = Kind::Boolean;
        v.boolean = token == "true";
        return v;
    }
    if (token.front() == '"') {
        if (token.size() < 2 || token.back() != '"') throw ConfigError("unterminated string: " + std::string(token));
        v.kind = Kind::Text;
        v.text = std::string(token.substr(1, token.size() - 2));
        return v;
    }
    if (token.front() == '[') {
        if (token.back() != ']') throw ConfigError("unterminated array: " + std::string(token));
        v.kind = Kind::List;
        auto body = trim(token.substr(1, token.size() - 2));
        while (!body.empty()) {
            const auto comma = body.find(',');
            const auto item = trim(body.substr(0, comma));
            if (!item.empty()) {
                double x = 0.0;
                if (!parse_number(item, x)) throw ConfigError("arrays hold numbers only: " + std::string(item));
                v.list.push_back(x);
            }
            if (comma == std::string_view::npos) break;
            body = body.substr(comma + 1);
        }
        return v;
    }
    double x = 0.0;
    if (parse_number(token, x)) {
        v.kind = Kind::Number;
        v.number = x;
        return v;
    }
    if (allow_bare_text) {
        v.kind = Kind::Text;
        v.text = std::string(token);
        return v;
    }
    throw ConfigError("cannot parse value: " + std::string(token));
}

std::string ConfigValue::to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case Kind::Number: os << number; break;
        case Kind::Boolean: os << (boolean ? "true" : "false"); break;
        case Kind::Text: os << '"' << text << '"'; break;
        case Kind::List:
            os << '[';
            for (std::size_t i = 0; i < list.size(); ++i) os << (i ? ", " : "") << list[i];
            os << ']';
            break;
    }
    return os.str();
}

Config Config::parse(std::string_view text) {
    Config cfg;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = trim(strip_comment(text.substr(0, nl)));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        const auto where = " (line " + std::to_string(line_no) + ")";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("bad section header" + where);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!valid_key(section)) throw ConfigError("bad section name" + where);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key = value" + where);
        const auto key = std::string(trim(line.substr(0, eq)));
        if (!valid_key(key)) throw ConfigError("bad key '" + key + "'" + where);
        const auto full = section.empty() ? key : section + "." + key;
        if (cfg.values_.count(full)) throw ConfigError("duplicate key '" + full + "'" + where);
        try {
            cfg.values_[full] = ConfigValue::parse(line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + where);
        }
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void Config::set_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override must look like key=value");
    const auto key = std::string(trim(assignment.substr(0, eq)));
    if (!valid_key(key)) throw ConfigError("bad override key '" + key + "'");
    values_[key] = ConfigValue::parse(assignment.substr(eq + 1), true);
}

const ConfigValue* Config::find(const std::string& key, ConfigValue::Kind kind) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    if (it->second.kind != kind) throw ConfigError("config key '" + key + "' has the wrong type");
    return &it->second;
}

double Config::number(const std::string& key, double fallback) const {
    const auto* v = find(key, ConfigValue::Kind::Number);
    return v ? v->number : fallback;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
    const auto* v = find(key, ConfigValue::Kind::Number);
    if (!v) return fallback;
    if (v->number != std::floor(v->number) || std::abs(v->number) > 9.0e15)
        throw ConfigError("config key '" + key + "' must be an integer");
    return static_cast<std::int64_t>(v->number);
}

bool Config::boolean(const std::string& key, bool fallback) const {
    const auto* v = find(key, ConfigValue::Kind::Boolean);
    return v ? v->boolean : fallback;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key, ConfigValue::Kind::Text);
    return v ? v->text : fallback;
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
    const auto* v = find(key, ConfigValue::Kind::List);
    return v ? v->list : fallback;
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!used_.count(k)) out.push_back(k);
    return out;
}

}  // namespace wfsep
