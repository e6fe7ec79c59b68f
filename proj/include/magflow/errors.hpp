#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace magflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear solve rejected because the factorization's condition estimate is too large
/// (or the factorization failed outright, in which case the estimate is +inf).
class IllConditioned : public Error {
public:
    IllConditioned(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Two distinct indices refer to coincident points.
class SingularPair : public Error {
public:
    SingularPair(std::size_t first, std::size_t second)
        : Error("coincident points at indices " + std::to_string(first) + " and " +
                std::to_string(second)),
          first_(first), second_(second) {}
    [[nodiscard]] std::size_t first() const noexcept { return first_; }
    [[nodiscard]] std::size_t second() const noexcept { return second_; }

private:
    std::size_t first_;
    std::size_t second_;
};

/// Objective evaluation produced non-finite values; `indices` names the offending points.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::vector<std::size_t> indices)
        : Error(what), indices_(std::move(indices)) {}
    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }

private:
    std::vector<std::size_t> indices_;
};

} // namespace magflow
