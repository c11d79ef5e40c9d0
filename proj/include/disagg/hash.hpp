#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace disagg {

/// Incremental 64-bit FNV-1a, used for training-window fingerprints.
class Fnv1a {
public:
    Fnv1a& bytes(const void* data, std::size_t n);
    Fnv1a& str(std::string_view s);
    Fnv1a& f64(double v);
    Fnv1a& i64(std::int64_t v);
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);
/// Lower-case hex SHA-256 of a file's contents; throws if unreadable.
std::string sha256_file(const std::string& path);

std::string hex64(std::uint64_t v);

}  // namespace disagg
