#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "revive/bytes.hpp"

namespace revive::sexpr {

struct Symbol {
    std::string name;
    friend bool operator==(const Symbol&, const Symbol&) = default;
};

/// Byte string; not necessarily valid UTF-8.
struct String {
    std::string bytes;
    friend bool operator==(const String&, const String&) = default;
};

/// Arbitrary-precision integer kept in canonical decimal form
/// (optional '-', no leading zeros, no "-0").
class Integer {
public:
    Integer() : text_("0") {}
    Integer(std::int64_t v);  // NOLINT(google-explicit-constructor)
    static Integer from_u64(std::uint64_t v);
    /// Throws std::invalid_argument unless `text` is canonical decimal.
    static Integer parse(std::string_view text);

    const std::string& text() const { return text_; }
    std::optional<std::int64_t> to_i64() const;
    std::optional<std::uint64_t> to_u64() const;

    friend bool operator==(const Integer&, const Integer&) = default;

private:
    std::string text_;
};

class Value;
using List = std::vector<Value>;

class Value {
public:
    using Variant = std::variant<Symbol, String, Integer, List>;

    Value() : v_(List{}) {}
    Value(Symbol s) : v_(std::move(s)) {}   // NOLINT
    Value(String s) : v_(std::move(s)) {}   // NOLINT
    Value(Integer i) : v_(std::move(i)) {}  // NOLINT
    Value(List l) : v_(std::move(l)) {}     // NOLINT

    bool is_symbol() const { return std::holds_alternative<Symbol>(v_); }
    bool is_string() const { return std::holds_alternative<String>(v_); }
    bool is_integer() const { return std::holds_alternative<Integer>(v_); }
    bool is_list() const { return std::holds_alternative<List>(v_); }

    const Symbol& symbol() const { return std::get<Symbol>(v_); }
    const String& string() const { return std::get<String>(v_); }
    const Integer& integer() const { return std::get<Integer>(v_); }
    const List& list() const { return std::get<List>(v_); }
    List& list() { return std::get<List>(v_); }

    const Variant& variant() const { return v_; }

    /// True when this is a list whose head is the symbol `name`.
    bool is_form(std::string_view name) const;

    friend bool operator==(const Value&, const Value&) = default;

private:
    Variant v_;
};

inline Value sym(std::string name) { return Symbol{std::move(name)}; }
inline Value str(std::string bytes) { return String{std::move(bytes)}; }
inline Value num(std::int64_t v) { return Integer(v); }

/// Builds `(head args...)`.
template <typename... Args>
Value form(std::string head, Args&&... args)
{
    return List{sym(std::move(head)), Value(std::forward<Args>(args))...};
}

/// Returns true for names made only of `a-z`, `0-9` and `-` that do not
/// read back as integers.
bool valid_symbol(std::string_view name);

/// Parses exactly one top-level value. `;` comments run to end of line.
Value parse(std::string_view text);
inline Value parse(ByteView bytes) { return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())); }

/// Canonical single-line rendering: one space between list items, strings
/// always quoted with `\"`, `\\` and `\xNN` for bytes outside 0x20-0x7E.
std::string write_canonical(const Value& value);

/// Multi-line rendering for human consumption. Reads back to the same value
/// but is not the canonical byte form.
std::string write_pretty(const Value& value, int indent = 2);

} // namespace revive::sexpr
