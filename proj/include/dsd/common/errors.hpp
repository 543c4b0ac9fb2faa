#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsd {

// Base of every error the pipeline raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The same call may succeed later (network blip, overloaded service).
class RetryableError : public Error {
 public:
  RetryableError(const std::string& message, std::string url = {})
      : Error(message), url_(std::move(url)) {}
  const std::string& url() const noexcept { return url_; }

 private:
  std::string url_;
};

// Server asked us to back off.
class RateLimitedError : public RetryableError {
 public:
  RateLimitedError(const std::string& url, std::chrono::seconds retry_after)
      : RetryableError("rate limited by " + url, url), retry_after_(retry_after) {}
  std::chrono::seconds retry_after() const noexcept { return retry_after_; }

 private:
  std::chrono::seconds retry_after_;
};

// Retrying will not help; the item should be skipped.
class PermanentError : public Error {
 public:
  using Error::Error;
};

// Malformed input. offset is the byte position where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Caller violated a documented precondition or passed an invalid value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace dsd
