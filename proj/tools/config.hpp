#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace spinglass::cli {

/// Invalid or missing configuration; the runner maps it to exit status 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat "key = value" file with one level of sections.
///
/// Every lookup records the resolved value (the default when the key is
/// absent), so the manifest and the hash cover exactly what a run used.
class Config {
public:
    static Config load(const std::string& path);
    static Config parse(const std::string& text);

    bool has(const std::string& key) const;

    std::string text(const std::string& key) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    double real(const std::string& key) const;
    double real(const std::string& key, double fallback) const;
    long integer(const std::string& key) const;
    long integer(const std::string& key, long fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) const;
    std::uint64_t seed() const;

    /// Keys present in the file but never read.
    std::vector<std::string> unused() const;
    const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }
    /// FNV-1a of the resolved "key=value" lines in key order.
    std::uint64_t hash() const;

private:
    boost::property_tree::ptree tree_;
    mutable std::map<std::string, std::string> resolved_;
    mutable std::set<std::string> used_;

    std::string raw(const std::string& key) const;
};

std::string format_real(double x);
std::string format_reals(const std::vector<double>& xs);
std::string hex64(std::uint64_t x);
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace spinglass::cli
