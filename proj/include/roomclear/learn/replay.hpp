#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace roomclear {

/// Fixed-capacity ring of transitions; the oldest entry goes first.
template <class T>
class ReplayBuffer
{
public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity)
  {
    if (capacity == 0) { throw std::invalid_argument("ReplayBuffer: capacity must be positive"); }
    data_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  bool        empty() const { return data_.empty(); }

  void push(T item)
  {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(item));
    } else {
      data_[cursor_] = std::move(item);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  /// Indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64 &rng) const
  {
    if (n > data_.size()) { throw std::length_error("ReplayBuffer: sample larger than buffer"); }
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t>                   out(n);
    for (auto &i : out) { i = pick(rng); }
    return out;
  }

  std::vector<T const *> sample(std::size_t n, std::mt19937_64 &rng) const
  {
    std::vector<T const *> out;
    out.reserve(n);
    for (auto i : sample_indices(n, rng)) { out.push_back(&data_[i]); }
    return out;
  }

  /// Storage order, not insertion order, once the ring has wrapped.
  T const &operator[](std::size_t i) const { return data_.at(i); }

private:
  std::size_t    capacity_;
  std::size_t    cursor_ = 0;
  std::vector<T> data_;
};

} // namespace roomclear
