#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <queue>
#include <string>
#include <type_traits>
#include <unistd.h>
#include <vector>

#include "webzsl/corpus.hpp"

namespace webzsl {

// Sorts fixed-width trivially-copyable records with bounded memory. Records
// are buffered; a full buffer is sorted and spilled as a run file; drain()
// k-way merges the runs. Run files are removed on destruction.
template <typename Record, typename Less = std::less<Record>>
class ExternalSorter {
  static_assert(std::is_trivially_copyable_v<Record>);

 public:
  ExternalSorter(std::size_t max_buffered, std::filesystem::path temp_dir = {},
                 Less less = {})
      : capacity_(std::max<std::size_t>(max_buffered, 1)),
        temp_dir_(temp_dir.empty() ? std::filesystem::temp_directory_path()
                                   : std::move(temp_dir)),
        less_(less) {
    buffer_.reserve(std::min<std::size_t>(capacity_, 1 << 20));
  }

  ExternalSorter(const ExternalSorter&) = delete;
  ExternalSorter& operator=(const ExternalSorter&) = delete;

  ~ExternalSorter() {
    std::error_code ec;
    for (const auto& run : runs_) std::filesystem::remove(run, ec);
  }

  void push(const Record& r) {
    buffer_.push_back(r);
    if (buffer_.size() >= capacity_) spill();
  }

  std::size_t run_count() const { return runs_.size(); }

  // Visits every record in ascending order. Single use.
  template <typename Visit>
  void drain(Visit&& visit) {
    if (runs_.empty()) {
      std::stable_sort(buffer_.begin(), buffer_.end(), less_);
      for (const auto& r : buffer_) visit(r);
      buffer_.clear();
      return;
    }
    if (!buffer_.empty()) spill();

    struct Cursor {
      std::ifstream in;
      Record current;
      std::size_t run;
    };
    std::vector<std::unique_ptr<Cursor>> cursors;
    auto advance = [](Cursor& c) {
      return static_cast<bool>(
          c.in.read(reinterpret_cast<char*>(&c.current), sizeof(Record)));
    };
    // Ties between runs resolve to the earlier run so equal keys keep push order.
    auto greater = [this](const Cursor* a, const Cursor* b) {
      if (less_(a->current, b->current)) return false;
      if (less_(b->current, a->current)) return true;
      return a->run > b->run;
    };
    std::priority_queue<Cursor*, std::vector<Cursor*>, decltype(greater)> heap(greater);
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      auto c = std::make_unique<Cursor>();
      c->in.open(runs_[i], std::ios::binary);
      if (!c->in) throw Error("cannot reopen sort run " + runs_[i].string());
      c->run = i;
      if (advance(*c)) heap.push(c.get());
      cursors.push_back(std::move(c));
    }
    while (!heap.empty()) {
      Cursor* top = heap.top();
      heap.pop();
      visit(top->current);
      if (advance(*top)) heap.push(top);
    }
  }

 private:
  void spill() {
    std::stable_sort(buffer_.begin(), buffer_.end(), less_);
    static std::atomic<unsigned long> serial{0};
    auto path = temp_dir_ / ("webzsl-run-" + std::to_string(::getpid()) + "-" +
                             std::to_string(serial++) + ".bin");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create sort run " + path.string());
    out.write(reinterpret_cast<const char*>(buffer_.data()),
              static_cast<std::streamsize>(buffer_.size() * sizeof(Record)));
    if (!out) throw Error("short write to sort run " + path.string());
    runs_.push_back(std::move(path));
    buffer_.clear();
  }

  std::size_t capacity_;
  std::filesystem::path temp_dir_;
  Less less_;
  std::vector<Record> buffer_;
  std::vector<std::filesystem::path> runs_;
};

}  // namespace webzsl
