#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace plangen {

// Minimal expected<T, E> (libstdc++ 11 has no std::expected). Holds either a
// value or an error; accessing the wrong side throws std::logic_error.
template <typename T, typename E>
class Expected {
public:
    Expected(T value) : v_(std::in_place_index<0>, std::move(value)) {}
    Expected(E error) : v_(std::in_place_index<1>, std::move(error)) {}

    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }

    const T& value() const& {
        if (!ok()) throw std::logic_error("Expected: no value");
        return std::get<0>(v_);
    }
    T& value() & {
        if (!ok()) throw std::logic_error("Expected: no value");
        return std::get<0>(v_);
    }
    T&& value() && {
        if (!ok()) throw std::logic_error("Expected: no value");
        return std::get<0>(std::move(v_));
    }

    const E& error() const& {
        if (ok()) throw std::logic_error("Expected: no error");
        return std::get<1>(v_);
    }

private:
    std::variant<T, E> v_;
};

}  // namespace plangen
