#pragma once

#include <optional>
#include <stdexcept>
#include <utility>

namespace morphic::util {

template <typename E>
struct Err {
  E e;
};

template <typename E>
Err<E> err(E e) {
  return {std::move(e)};
}

// Minimal result type: a value or an error, never both.
template <typename T, typename E>
class [[nodiscard]] Expected {
 public:
  Expected(T v) : val_(std::move(v)) {}
  Expected(Err<E> u) : error_(std::move(u.e)) {}

  bool ok() const { return val_.has_value(); }
  explicit operator bool() const { return ok(); }

  T& value() {
    if (!val_) throw std::logic_error("Expected: value() on error state");
    return *val_;
  }
  const T& value() const {
    if (!val_) throw std::logic_error("Expected: value() on error state");
    return *val_;
  }
  T& operator*() { return value(); }
  const T& operator*() const { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

  const E& error() const {
    if (val_) throw std::logic_error("Expected: error() on value state");
    return *error_;
  }

 private:
  std::optional<T> val_;
  std::optional<E> error_;
};

}  // namespace morphic::util
