#include "revive/sexpr.hpp"

#include <charconv>
#include <limits>
#include <stdexcept>

#include "revive/error.hpp"

namespace revive::sexpr {

// --- Integer -----------------------------------------------------------------

Integer::Integer(std::int64_t v) : text_(std::to_string(v)) {}

Integer Integer::from_u64(std::uint64_t v)
{
    Integer i;
    i.text_ = std::to_string(v);
    return i;
}

namespace {

bool canonical_decimal(std::string_view t)
{
    std::string_view digits = t;
    if (!digits.empty() && digits.front() == '-') digits.remove_prefix(1);
    if (digits.empty()) return false;
    for (char c : digits)
        if (c < '0' || c > '9') return false;
    if (digits.size() > 1 && digits.front() == '0') return false;
    if (t.front() == '-' && digits == "0") return false;
    return true;
}

} // namespace

Integer Integer::parse(std::string_view text)
{
    if (!canonical_decimal(text)) throw std::invalid_argument("not a canonical integer: " + std::string(text));
    Integer i;
    i.text_ = std::string(text);
    return i;
}

std::optional<std::int64_t> Integer::to_i64() const
{
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text_.data(), text_.data() + text_.size(), v);
    if (ec != std::errc() || p != text_.data() + text_.size()) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> Integer::to_u64() const
{
    if (!text_.empty() && text_.front() == '-') return std::nullopt;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text_.data(), text_.data() + text_.size(), v);
    if (ec != std::errc() || p != text_.data() + text_.size()) return std::nullopt;
    return v;
}

// --- Value -------------------------------------------------------------------

bool Value::is_form(std::string_view name) const
{
    if (!is_list()) return false;
    const auto& l = list();
    return !l.empty() && l.front().is_symbol() && l.front().symbol().name == name;
}

bool valid_symbol(std::string_view name)
{
    if (name.empty()) return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
        if (!ok) return false;
    }
    // Anything that looks numeric is reserved for integers.
    std::string_view digits = name;
    if (digits.front() == '-') digits.remove_prefix(1);
    bool all_digits = !digits.empty();
    for (char c : digits)
        if (c < '0' || c > '9') all_digits = false;
    return !all_digits;
}

// --- reader ------------------------------------------------------------------

namespace {

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    Value read_top()
    {
        skip_space();
        if (at_end()) fail(ErrorKind::UnbalancedParens, "empty input");
        Value v = read_value();
        skip_space();
        if (!at_end()) {
            if (text_[pos_] == ')') fail(ErrorKind::UnbalancedParens, "unexpected ')' at offset " + std::to_string(pos_));
            fail(ErrorKind::TrailingGarbage, "extra data at offset " + std::to_string(pos_));
        }
        return v;
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
    static bool is_delim(char c) { return is_space(c) || c == '(' || c == ')' || c == '"' || c == ';'; }

    void skip_space()
    {
        while (!at_end()) {
            char c = text_[pos_];
            if (is_space(c)) {
                ++pos_;
            } else if (c == ';') {
                while (!at_end() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    Value read_value()
    {
        char c = text_[pos_];
        if (c == '(') return read_list();
        if (c == ')') fail(ErrorKind::UnbalancedParens, "unexpected ')' at offset " + std::to_string(pos_));
        if (c == '"') return read_string();
        return read_atom();
    }

    Value read_list()
    {
        std::size_t open = pos_++;
        List items;
        for (;;) {
            skip_space();
            if (at_end()) fail(ErrorKind::UnbalancedParens, "unclosed '(' at offset " + std::to_string(open));
            if (text_[pos_] == ')') {
                ++pos_;
                return items;
            }
            items.push_back(read_value());
        }
    }

    Value read_string()
    {
        std::size_t open = pos_++;
        std::string out;
        for (;;) {
            if (at_end()) fail(ErrorKind::UnbalancedParens, "unterminated string at offset " + std::to_string(open));
            char c = text_[pos_++];
            if (c == '"') return String{std::move(out)};
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (at_end()) fail(ErrorKind::InvalidEscape, "dangling backslash");
            char e = text_[pos_++];
            if (e == '"' || e == '\\') {
                out.push_back(e);
            } else if (e == 'x') {
                if (pos_ + 2 > text_.size()) fail(ErrorKind::InvalidEscape, "truncated \\x escape");
                auto hex = text_.substr(pos_, 2);
                if (!is_hex(hex)) fail(ErrorKind::InvalidEscape, "bad \\x escape '" + std::string(hex) + "'");
                out.push_back(static_cast<char>(from_hex(hex)[0]));
                pos_ += 2;
            } else {
                fail(ErrorKind::InvalidEscape, std::string("unknown escape \\") + e);
            }
        }
    }

    Value read_atom()
    {
        std::size_t start = pos_;
        while (!at_end() && !is_delim(text_[pos_])) ++pos_;
        auto tok = text_.substr(start, pos_ - start);
        if (canonical_decimal(tok)) return Integer::parse(tok);
        if (valid_symbol(tok)) return Symbol{std::string(tok)};
        fail(ErrorKind::InvalidToken, "invalid token '" + std::string(tok) + "' at offset " + std::to_string(start));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void write_string(std::string& out, const std::string& bytes)
{
    static constexpr char hex[] = "0123456789abcdef";
    out.push_back('"');
    for (unsigned char c : bytes) {
        if (c == '"' || c == '\\') {
            out.push_back('\\');
            out.push_back(static_cast<char>(c));
        } else if (c < 0x20 || c > 0x7e) {
            out += "\\x";
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    out.push_back('"');
}

void write_value(std::string& out, const Value& v)
{
    if (v.is_symbol()) {
        out += v.symbol().name;
    } else if (v.is_string()) {
        write_string(out, v.string().bytes);
    } else if (v.is_integer()) {
        out += v.integer().text();
    } else {
        out.push_back('(');
        bool first = true;
        for (const auto& item : v.list()) {
            if (!first) out.push_back(' ');
            first = false;
            write_value(out, item);
        }
        out.push_back(')');
    }
}

bool is_flat(const Value& v)
{
    if (!v.is_list()) return true;
    for (const auto& item : v.list())
        if (item.is_list()) return false;
    return true;
}

void write_pretty_value(std::string& out, const Value& v, int depth, int indent)
{
    if (is_flat(v) || (v.is_list() && v.list().size() <= 2 && is_flat(v.list().back()))) {
        write_value(out, v);
        return;
    }
    const auto& items = v.list();
    out.push_back('(');
    std::size_t i = 0;
    // Keep a leading atom (form name, member name) on the opening line.
    if (!items.empty() && !items.front().is_list()) {
        write_value(out, items.front());
        i = 1;
    }
    for (; i < items.size(); ++i) {
        if (i == 0) {
            write_pretty_value(out, items[i], depth + 1, indent);
            continue;
        }
        out.push_back('\n');
        out.append(static_cast<std::size_t>((depth + 1) * indent), ' ');
        write_pretty_value(out, items[i], depth + 1, indent);
    }
    out.push_back(')');
}

} // namespace

Value parse(std::string_view text)
{
    return Reader(text).read_top();
}

std::string write_canonical(const Value& value)
{
    std::string out;
    write_value(out, value);
    return out;
}

std::string write_pretty(const Value& value, int indent)
{
    std::string out;
    write_pretty_value(out, value, 0, indent);
    out.push_back('\n');
    return out;
}

} // namespace revive::sexpr
