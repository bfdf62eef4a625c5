#include "config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>

namespace spinglass::cli {

namespace pt = boost::property_tree;

std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_reals(const std::vector<double>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0)
            out += ',';
        out += format_real(xs[i]);
    }
    return out;
}

std::string hex64(std::uint64_t x)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

Config Config::load(const std::string& path)
{
    Config c;
    try {
        pt::read_ini(path, c.tree_);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cannot read config: " + std::string(e.what()));
    }
    return c;
}

Config Config::parse(const std::string& text)
{
    Config c;
    std::istringstream in(text);
    try {
        pt::read_ini(in, c.tree_);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cannot parse config: " + std::string(e.what()));
    }
    return c;
}

bool Config::has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

std::string Config::raw(const std::string& key) const
{
    auto v = tree_.get_optional<std::string>(key);
    if (!v)
        throw ConfigError("missing key: " + key);
    used_.insert(key);
    return boost::algorithm::trim_copy(*v);
}

std::string Config::text(const std::string& key) const
{
    auto v = raw(key);
    resolved_[key] = v;
    return v;
}

std::string Config::text(const std::string& key, const std::string& fallback) const
{
    if (has(key))
        return text(key);
    resolved_[key] = fallback;
    return fallback;
}

namespace {

double parse_real(const std::string& key, const std::string& s)
{
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(x))
        throw ConfigError("key " + key + ": not a finite number: '" + s + "'");
    return x;
}

long parse_integer(const std::string& key, const std::string& s)
{
    errno = 0;
    char* end = nullptr;
    const long x = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw ConfigError("key " + key + ": not an integer: '" + s + "'");
    return x;
}

}  // namespace

double Config::real(const std::string& key) const
{
    const double x = parse_real(key, raw(key));
    resolved_[key] = format_real(x);
    return x;
}

double Config::real(const std::string& key, double fallback) const
{
    if (has(key))
        return real(key);
    resolved_[key] = format_real(fallback);
    return fallback;
}

long Config::integer(const std::string& key) const
{
    const long x = parse_integer(key, raw(key));
    resolved_[key] = std::to_string(x);
    return x;
}

long Config::integer(const std::string& key, long fallback) const
{
    if (has(key))
        return integer(key);
    resolved_[key] = std::to_string(fallback);
    return fallback;
}

bool Config::flag(const std::string& key, bool fallback) const
{
    bool x = fallback;
    if (has(key)) {
        const auto s = raw(key);
        if (s == "true" || s == "1" || s == "yes")
            x = true;
        else if (s == "false" || s == "0" || s == "no")
            x = false;
        else
            throw ConfigError("key " + key + ": expected true or false");
    }
    resolved_[key] = x ? "true" : "false";
    return x;
}

std::vector<double> Config::reals(const std::string& key) const
{
    const auto s = raw(key);
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        out.push_back(parse_real(key, boost::algorithm::trim_copy(item)));
    if (out.empty())
        throw ConfigError("key " + key + ": empty list");
    resolved_[key] = format_reals(out);
    return out;
}

std::vector<double> Config::reals(const std::string& key, const std::vector<double>& fallback) const
{
    if (has(key))
        return reals(key);
    resolved_[key] = format_reals(fallback);
    return fallback;
}

std::uint64_t Config::seed() const
{
    if (!has("seed"))
        throw ConfigError("seed required");
    const auto s = raw("seed");
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno == ERANGE)
        throw ConfigError("seed must be a nonnegative 64-bit integer");
    resolved_["seed"] = std::to_string(x);
    return x;
}

std::vector<std::string> Config::unused() const
{
    std::vector<std::string> out;
    for (const auto& [name, node] : tree_) {
        if (node.empty()) {
            if (!used_.count(name))
                out.push_back(name);
            continue;
        }
        for (const auto& [key, leaf] : node) {
            const auto full = name + "." + key;
            if (!used_.count(full))
                out.push_back(full);
        }
    }
    return out;
}

std::uint64_t Config::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [k, v] : resolved_)
        h = fnv1a(k + "=" + v + "\n", h);
    return h;
}

}  // namespace spinglass::cli
