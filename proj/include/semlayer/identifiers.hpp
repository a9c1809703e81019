#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <string_view>

namespace semlayer {

/// ASCII case fold. Identifiers are stored in original case and compared folded.
std::string fold(std::string_view text);

/// Case-insensitive three-way comparison over ASCII.
std::strong_ordering icompare(std::string_view a, std::string_view b) noexcept;

inline bool iequals(std::string_view a, std::string_view b) noexcept {
  return icompare(a, b) == std::strong_ordering::equal;
}

struct ILess {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const noexcept {
    return icompare(a, b) == std::strong_ordering::less;
  }
};

using NameSet = std::set<std::string, ILess>;

/// A base-table column. Equality and ordering ignore ASCII case.
struct ColumnRef {
  std::string table;
  std::string column;

  friend std::strong_ordering operator<=>(const ColumnRef& a, const ColumnRef& b) noexcept {
    if (auto c = icompare(a.table, b.table); c != std::strong_ordering::equal) return c;
    return icompare(a.column, b.column);
  }
  friend bool operator==(const ColumnRef& a, const ColumnRef& b) noexcept {
    return (a <=> b) == std::strong_ordering::equal;
  }

  std::string qualified() const { return table + "." + column; }
};

using ColumnSet = std::set<ColumnRef>;

/// Unordered pair of columns, stored with `first <= second`.
struct ColumnPair {
  ColumnRef first;
  ColumnRef second;

  static ColumnPair make(const ColumnRef& a, const ColumnRef& b) {
    return a < b ? ColumnPair{a, b} : ColumnPair{b, a};
  }
  friend auto operator<=>(const ColumnPair&, const ColumnPair&) = default;
  friend bool operator==(const ColumnPair&, const ColumnPair&) = default;
};

/// Double-quote an identifier for SQLite.
std::string quote_identifier(std::string_view name);

/// Single-quote a string literal for SQLite.
std::string quote_literal(std::string_view text);

}  // namespace semlayer
