// Copyright 2026 The pimtree Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pimtree/core/types.hpp"

namespace pimtree {

template <std::size_t LeafCap, std::size_t FanOut>
struct BTreeNodes {
  static_assert(LeafCap >= 3, "leaf capacity must be at least 3");
  static_assert(FanOut >= 3, "fan-out must be at least 3");

  struct Node {
    bool is_leaf = true;
    std::uint16_t count = 0;  // entries in a leaf, children in an inner node
  };

  struct Leaf : Node {
    bool tail = false;
    Leaf* next = nullptr;
    Entry entries[LeafCap];
  };

  struct Inner : Node {
    Entry seps[FanOut - 1];  // seps[i] is the smallest entry of children[i + 1]
    Node* children[FanOut];
  };
};

/// Classic B+-tree keyed on (key, seq). Leaves form a singly linked chain
/// whose last leaf carries the tail flag; the chain may be continued by an
/// external owner through `link_tail_to`.
template <std::size_t LeafCap = 32, std::size_t FanOut = 32>
class MutableBTree {
 public:
  using Nodes = BTreeNodes<LeafCap, FanOut>;
  using Node = typename Nodes::Node;
  using Leaf = typename Nodes::Leaf;
  using Inner = typename Nodes::Inner;

  static constexpr std::size_t kLeafCapacity = LeafCap;
  static constexpr std::size_t kFanOut = FanOut;
  static constexpr std::size_t kMinLeaf = (LeafCap + 1) / 2;
  static constexpr std::size_t kMinInner = (FanOut + 1) / 2;

  struct Cursor {
    Leaf* leaf = nullptr;
    std::size_t pos = 0;
  };

  MutableBTree() { reset(); }
  ~MutableBTree() { destroy(root_); }

  MutableBTree(const MutableBTree&) = delete;
  MutableBTree& operator=(const MutableBTree&) = delete;

  MutableBTree(MutableBTree&& o) noexcept
      : root_(std::exchange(o.root_, nullptr)),
        head_(std::exchange(o.head_, nullptr)),
        tail_(std::exchange(o.tail_, nullptr)),
        size_(std::exchange(o.size_, 0)),
        height_(std::exchange(o.height_, 0)) {}

  MutableBTree& operator=(MutableBTree&& o) noexcept {
    if (this != &o) {
      destroy(root_);
      root_ = std::exchange(o.root_, nullptr);
      head_ = std::exchange(o.head_, nullptr);
      tail_ = std::exchange(o.tail_, nullptr);
      size_ = std::exchange(o.size_, 0);
      height_ = std::exchange(o.height_, 0);
    }
    return *this;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  /// Levels including the leaf level.
  std::size_t height() const noexcept { return height_; }

  Leaf* head_leaf() const noexcept { return head_; }
  Leaf* tail_leaf() const noexcept { return tail_; }

  /// Points the tail leaf's chain pointer at a leaf owned by someone else.
  void link_tail_to(Leaf* next) noexcept { tail_->next = next; }

  void clear() {
    Leaf* ext = tail_ ? tail_->next : nullptr;
    destroy(root_);
    reset();
    tail_->next = ext;
  }

  /// `e` must not already be present; (key, seq) pairs are unique.
  void insert(Entry e) {
    Entry sep;
    Node* right = insert_rec(root_, e, sep);
    if (right) {
      auto* r = new Inner;
      r->is_leaf = false;
      r->count = 2;
      r->children[0] = root_;
      r->children[1] = right;
      r->seps[0] = sep;
      root_ = r;
      ++height_;
    }
    ++size_;
  }

  /// Removes one entry equal to `e`. Returns false if none exists.
  bool erase(Entry e) {
    if (!erase_rec(root_, e)) return false;
    --size_;
    if (!root_->is_leaf && root_->count == 1) {
      auto* old = static_cast<Inner*>(root_);
      root_ = old->children[0];
      delete old;
      --height_;
    }
    return true;
  }

  /// First entry with entry.key >= key in chain order. When every key is
  /// smaller, returns the first empty slot of the tail leaf.
  Cursor lower_bound(Key key) const noexcept {
    const Entry probe{key, kMinKey};
    Node* n = root_;
    while (!n->is_leaf) {
      auto* in = static_cast<Inner*>(n);
      const Entry* seps = in->seps;
      n = in->children[std::upper_bound(seps, seps + (in->count - 1), probe) - seps];
    }
    auto* leaf = static_cast<Leaf*>(n);
    std::size_t pos = std::lower_bound(leaf->entries, leaf->entries + leaf->count, probe) - leaf->entries;
    if (pos == leaf->count && !leaf->tail) {
      leaf = leaf->next;
      pos = 0;
    }
    return {leaf, pos};
  }

  /// Calls fn(entry) for entries with key in `range`, ascending.
  template <class Fn>
  void for_each_in_range(KeyRange range, Fn&& fn) const {
    if (range.empty()) return;
    auto [leaf, pos] = lower_bound(range.lo);
    for (;;) {
      for (; pos < leaf->count; ++pos) {
        const Entry& e = leaf->entries[pos];
        if (e.key > range.hi) return;
        fn(e);
      }
      if (leaf->tail) return;
      leaf = leaf->next;
      pos = 0;
    }
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (Leaf* l = head_;; l = l->next) {
      for (std::size_t i = 0; i < l->count; ++i) fn(l->entries[i]);
      if (l->tail) return;
    }
  }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(size_);
    for_each([&](const Entry& e) { out.push_back(e); });
    return out;
  }

  /// Throws std::logic_error describing the first violated invariant.
  void check_invariants() const {
    std::size_t leaf_depth = 0, counted = 0, leaves = 0;
    std::vector<Leaf*> order;
    check_rec(root_, 1, nullptr, nullptr, leaf_depth, counted, order);
    if (counted != size_) fail("size mismatch");
    if (leaf_depth != height_) fail("height mismatch");
    if (order.front() != head_ || order.back() != tail_) fail("chain endpoints");
    for (Leaf* l = head_;; l = l->next) {
      if (leaves >= order.size() || order[leaves] != l) fail("chain order");
      ++leaves;
      if (l->tail) break;
      if (l == tail_) fail("tail leaf not flagged");
    }
    if (leaves != order.size()) fail("chain length");
    const auto all = entries();
    if (!std::is_sorted(all.begin(), all.end())) fail("chain not sorted");
  }

 private:
  [[noreturn]] static void fail(const std::string& what) { throw std::logic_error("btree: " + what); }

  void reset() {
    auto* leaf = new Leaf;
    leaf->tail = true;
    root_ = leaf;
    head_ = tail_ = leaf;
    size_ = 0;
    height_ = 1;
  }

  static void destroy(Node* n) {
    if (!n) return;
    if (n->is_leaf) {
      delete static_cast<Leaf*>(n);
      return;
    }
    auto* in = static_cast<Inner*>(n);
    for (std::size_t i = 0; i < in->count; ++i) destroy(in->children[i]);
    delete in;
  }

  static std::size_t child_slot(const Inner* in, const Entry& e) {
    return std::upper_bound(in->seps, in->seps + (in->count - 1), e) - in->seps;
  }

  // Returns the new right sibling when `n` split; `sep` receives its first entry.
  Node* insert_rec(Node* n, const Entry& e, Entry& sep) {
    if (n->is_leaf) {
      auto* leaf = static_cast<Leaf*>(n);
      std::size_t pos = std::upper_bound(leaf->entries, leaf->entries + leaf->count, e) - leaf->entries;
      if (leaf->count < LeafCap) {
        std::move_backward(leaf->entries + pos, leaf->entries + leaf->count, leaf->entries + leaf->count + 1);
        leaf->entries[pos] = e;
        ++leaf->count;
        return nullptr;
      }
      auto* right = new Leaf;
      const std::size_t keep = (LeafCap + 1) / 2;
      Entry buf[LeafCap + 1];
      std::copy(leaf->entries, leaf->entries + pos, buf);
      buf[pos] = e;
      std::copy(leaf->entries + pos, leaf->entries + LeafCap, buf + pos + 1);
      std::copy(buf, buf + keep, leaf->entries);
      std::copy(buf + keep, buf + LeafCap + 1, right->entries);
      leaf->count = static_cast<std::uint16_t>(keep);
      right->count = static_cast<std::uint16_t>(LeafCap + 1 - keep);
      right->next = leaf->next;
      leaf->next = right;
      if (leaf->tail) {
        leaf->tail = false;
        right->tail = true;
        tail_ = right;
      }
      sep = right->entries[0];
      return right;
    }

    auto* in = static_cast<Inner*>(n);
    const std::size_t i = child_slot(in, e);
    Entry child_sep;
    Node* child_right = insert_rec(in->children[i], e, child_sep);
    if (!child_right) return nullptr;
    if (in->count < FanOut) {
      std::move_backward(in->seps + i, in->seps + in->count - 1, in->seps + in->count);
      std::move_backward(in->children + i + 1, in->children + in->count, in->children + in->count + 1);
      in->seps[i] = child_sep;
      in->children[i + 1] = child_right;
      ++in->count;
      return nullptr;
    }
    Entry sbuf[FanOut];
    Node* cbuf[FanOut + 1];
    std::copy(in->seps, in->seps + i, sbuf);
    sbuf[i] = child_sep;
    std::copy(in->seps + i, in->seps + FanOut - 1, sbuf + i + 1);
    std::copy(in->children, in->children + i + 1, cbuf);
    cbuf[i + 1] = child_right;
    std::copy(in->children + i + 1, in->children + FanOut, cbuf + i + 2);

    const std::size_t left_children = (FanOut + 2) / 2;
    const std::size_t right_children = FanOut + 1 - left_children;
    auto* right = new Inner;
    right->is_leaf = false;
    std::copy(cbuf, cbuf + left_children, in->children);
    std::copy(sbuf, sbuf + left_children - 1, in->seps);
    in->count = static_cast<std::uint16_t>(left_children);
    sep = sbuf[left_children - 1];
    std::copy(cbuf + left_children, cbuf + FanOut + 1, right->children);
    std::copy(sbuf + left_children, sbuf + FanOut, right->seps);
    right->count = static_cast<std::uint16_t>(right_children);
    return right;
  }

  bool erase_rec(Node* n, const Entry& e) {
    if (n->is_leaf) {
      auto* leaf = static_cast<Leaf*>(n);
      auto* it = std::lower_bound(leaf->entries, leaf->entries + leaf->count, e);
      if (it == leaf->entries + leaf->count || *it != e) return false;
      std::move(it + 1, leaf->entries + leaf->count, it);
      --leaf->count;
      return true;
    }
    auto* in = static_cast<Inner*>(n);
    const std::size_t i = child_slot(in, e);
    if (!erase_rec(in->children[i], e)) return false;
    Node* c = in->children[i];
    const std::size_t min = c->is_leaf ? kMinLeaf : kMinInner;
    if (c->count < min) rebalance(in, i);
    return true;
  }

  void rebalance(Inner* parent, std::size_t i) {
    Node* c = parent->children[i];
    Node* left = i > 0 ? parent->children[i - 1] : nullptr;
    Node* right = i + 1 < parent->count ? parent->children[i + 1] : nullptr;
    const std::size_t min = c->is_leaf ? kMinLeaf : kMinInner;

    if (left && left->count > min) {
      borrow_from_left(parent, i);
    } else if (right && right->count > min) {
      borrow_from_right(parent, i);
    } else if (left) {
      merge_children(parent, i - 1);
    } else if (right) {
      merge_children(parent, i);
    }
  }

  void borrow_from_left(Inner* parent, std::size_t i) {
    Node* cn = parent->children[i];
    Node* ln = parent->children[i - 1];
    if (cn->is_leaf) {
      auto* c = static_cast<Leaf*>(cn);
      auto* l = static_cast<Leaf*>(ln);
      std::move_backward(c->entries, c->entries + c->count, c->entries + c->count + 1);
      c->entries[0] = l->entries[l->count - 1];
      ++c->count;
      --l->count;
      parent->seps[i - 1] = c->entries[0];
      return;
    }
    auto* c = static_cast<Inner*>(cn);
    auto* l = static_cast<Inner*>(ln);
    std::move_backward(c->seps, c->seps + c->count - 1, c->seps + c->count);
    std::move_backward(c->children, c->children + c->count, c->children + c->count + 1);
    c->seps[0] = parent->seps[i - 1];
    c->children[0] = l->children[l->count - 1];
    ++c->count;
    parent->seps[i - 1] = l->seps[l->count - 2];
    --l->count;
  }

  void borrow_from_right(Inner* parent, std::size_t i) {
    Node* cn = parent->children[i];
    Node* rn = parent->children[i + 1];
    if (cn->is_leaf) {
      auto* c = static_cast<Leaf*>(cn);
      auto* r = static_cast<Leaf*>(rn);
      c->entries[c->count++] = r->entries[0];
      std::move(r->entries + 1, r->entries + r->count, r->entries);
      --r->count;
      parent->seps[i] = r->entries[0];
      return;
    }
    auto* c = static_cast<Inner*>(cn);
    auto* r = static_cast<Inner*>(rn);
    c->seps[c->count - 1] = parent->seps[i];
    c->children[c->count] = r->children[0];
    ++c->count;
    parent->seps[i] = r->seps[0];
    std::move(r->seps + 1, r->seps + r->count - 1, r->seps);
    std::move(r->children + 1, r->children + r->count, r->children);
    --r->count;
  }

  // Folds children[i + 1] into children[i] and frees it.
  void merge_children(Inner* parent, std::size_t i) {
    Node* ln = parent->children[i];
    Node* rn = parent->children[i + 1];
    if (ln->is_leaf) {
      auto* l = static_cast<Leaf*>(ln);
      auto* r = static_cast<Leaf*>(rn);
      std::copy(r->entries, r->entries + r->count, l->entries + l->count);
      l->count = static_cast<std::uint16_t>(l->count + r->count);
      l->next = r->next;
      if (r->tail) {
        l->tail = true;
        tail_ = l;
      }
      delete r;
    } else {
      auto* l = static_cast<Inner*>(ln);
      auto* r = static_cast<Inner*>(rn);
      l->seps[l->count - 1] = parent->seps[i];
      std::copy(r->seps, r->seps + r->count - 1, l->seps + l->count);
      std::copy(r->children, r->children + r->count, l->children + l->count);
      l->count = static_cast<std::uint16_t>(l->count + r->count);
      delete r;
    }
    std::move(parent->seps + i + 1, parent->seps + parent->count - 1, parent->seps + i);
    std::move(parent->children + i + 2, parent->children + parent->count, parent->children + i + 1);
    --parent->count;
  }

  void check_rec(Node* n, std::size_t depth, const Entry* lo, const Entry* hi, std::size_t& leaf_depth,
                 std::size_t& counted, std::vector<Leaf*>& order) const {
    const bool is_root = n == root_;
    if (n->is_leaf) {
      auto* leaf = static_cast<Leaf*>(n);
      if (leaf_depth == 0) leaf_depth = depth;
      if (leaf_depth != depth) fail("leaves at different depths");
      if (!is_root && leaf->count < kMinLeaf) fail("leaf underflow");
      for (std::size_t k = 0; k < leaf->count; ++k) {
        const Entry& e = leaf->entries[k];
        if (k > 0 && e < leaf->entries[k - 1]) fail("leaf not sorted");
        if (lo && e < *lo) fail("entry below separator");
        if (hi && !(e < *hi)) fail("entry above separator");
      }
      if (leaf->tail != (leaf == tail_)) fail("tail flag");
      counted += leaf->count;
      order.push_back(leaf);
      return;
    }
    auto* in = static_cast<Inner*>(n);
    if (in->count < (is_root ? 2u : kMinInner)) fail("inner underflow");
    for (std::size_t k = 0; k < in->count; ++k) {
      const Entry* clo = k == 0 ? lo : &in->seps[k - 1];
      const Entry* chi = k + 1 == in->count ? hi : &in->seps[k];
      check_rec(in->children[k], depth + 1, clo, chi, leaf_depth, counted, order);
    }
  }

  Node* root_ = nullptr;
  Leaf* head_ = nullptr;
  Leaf* tail_ = nullptr;
  std::size_t size_ = 0;
  std::size_t height_ = 0;
};

}  // namespace pimtree
