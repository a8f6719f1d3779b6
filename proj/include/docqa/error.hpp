#pragma once

#include <stdexcept>
#include <string>

namespace docqa {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent corpus data.
class CorpusError : public Error {
 public:
  using Error::Error;
};

// A token that cannot be mapped to an embedding (no characters in the charset).
class UnembeddableToken : public Error {
 public:
  explicit UnembeddableToken(const std::string& token)
      : Error("unembeddable token '" + token + "'"), token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// Embedding store lookups for keys that were never stored.
class MissingEmbedding : public Error {
 public:
  explicit MissingEmbedding(const std::string& key)
      : Error("no embedding stored for key '" + key + "'"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Invalid model parameters, degenerate fits, dimension mismatches.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Aggregation over an empty set of content words.
class NoContentWords : public Error {
 public:
  NoContentWords() : Error("no content words") {}
};

// An artifact was produced under a different configuration than the one supplied.
class FingerprintMismatch : public Error {
 public:
  FingerprintMismatch(const std::string& expected, const std::string& actual)
      : Error("fingerprint mismatch: artifact has " + actual +
              ", configuration expects " + expected),
        expected_(expected),
        actual_(actual) {}
  const std::string& expected() const { return expected_; }
  const std::string& actual() const { return actual_; }

 private:
  std::string expected_;
  std::string actual_;
};

}  // namespace docqa
