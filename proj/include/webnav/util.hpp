#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace webnav {

// Base class for every error the library raises. Subclasses name the
// failure category so callers (the CLI in particular) can map them to exit
// codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapacityError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };
class InvalidPermutationError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class UnknownTaskError : public Error { using Error::Error; };
class NoRuleError : public Error { using Error::Error; };
class TranslationError : public Error { using Error::Error; };
class DecodeError : public Error { using Error::Error; };
class UnknownTokenError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

using Rng = std::mt19937_64;

// Portable draws: the std distributions are implementation-defined, and
// every generated artifact must be byte-stable across standard libraries.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive
double uniform_real(Rng& rng);              // [0, 1)

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

// Sample k distinct indices from [0, n), returned in increasing order.
std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, std::size_t k);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

std::uint64_t fnv1a(std::string_view s);
std::string hex_digest(std::string_view bytes);

// Lowercases and splits on any character that is not alphanumeric.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> split_whitespace(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace webnav
