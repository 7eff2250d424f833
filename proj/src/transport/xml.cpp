#include "srv6kit/transport/xml.hpp"

#include <charconv>

#include "srv6kit/core/error.hpp"

namespace srv6kit::transport::xml {

namespace {

[[noreturn]] void fail(const std::string& what, std::size_t offset, const std::string& path = {})
{
    std::string msg = what + " at byte " + std::to_string(offset);
    if (!path.empty())
        msg += " in " + path;
    throw Error(Errc::MalformedMessage, msg, offset);
}

bool name_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
}

void append_utf8(std::string& out, unsigned cp)
{
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xc0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xe0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
        out += static_cast<char>(0xf0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    }
}

std::string_view local(std::string_view qname)
{
    auto c = qname.find(':');
    return c == std::string_view::npos ? qname : qname.substr(c + 1);
}

std::string_view trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

class Parser {
public:
    explicit Parser(std::string_view d) : d_(d) {}

    Element document()
    {
        skip_misc();
        if (pos_ >= d_.size() || d_[pos_] != '<')
            fail("expected root element", pos_);
        Element root = element("");
        skip_misc();
        if (pos_ != d_.size())
            fail("content after root element", pos_);
        return root;
    }

private:
    void skip_ws()
    {
        while (pos_ < d_.size() && (d_[pos_] == ' ' || d_[pos_] == '\t' || d_[pos_] == '\r' || d_[pos_] == '\n'))
            ++pos_;
    }

    bool starts(std::string_view s) const { return d_.substr(pos_, s.size()) == s; }

    // whitespace, comments, PIs
    void skip_misc()
    {
        while (true) {
            skip_ws();
            if (starts("<?")) {
                auto e = d_.find("?>", pos_);
                if (e == std::string_view::npos)
                    fail("unterminated processing instruction", pos_);
                pos_ = e + 2;
            } else if (starts("<!--")) {
                skip_comment();
            } else {
                return;
            }
        }
    }

    void skip_comment()
    {
        auto e = d_.find("-->", pos_ + 4);
        if (e == std::string_view::npos)
            fail("unterminated comment", pos_);
        pos_ = e + 3;
    }

    std::string_view name()
    {
        std::size_t start = pos_;
        while (pos_ < d_.size() && name_char(d_[pos_]))
            ++pos_;
        if (pos_ == start)
            fail("expected name", pos_);
        return d_.substr(start, pos_ - start);
    }

    std::string decode(std::string_view raw, std::size_t base, const std::string& path)
    {
        std::string out;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            char c = raw[i];
            if (c == '<')
                fail("'<' in character data", base + i, path);
            if (c != '&') {
                out += c;
                continue;
            }
            auto semi = raw.find(';', i);
            if (semi == std::string_view::npos)
                fail("unterminated entity", base + i, path);
            auto ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "lt")
                out += '<';
            else if (ent == "gt")
                out += '>';
            else if (ent == "amp")
                out += '&';
            else if (ent == "quot")
                out += '"';
            else if (ent == "apos")
                out += '\'';
            else if (ent.size() > 1 && ent[0] == '#') {
                unsigned cp = 0;
                bool hex = ent[1] == 'x';
                auto digits = ent.substr(hex ? 2 : 1);
                auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
                if (digits.empty() || ec != std::errc() || p != digits.data() + digits.size() || cp > 0x10ffff)
                    fail("bad character reference", base + i, path);
                append_utf8(out, cp);
            } else {
                fail("unknown entity '" + std::string(ent) + "'", base + i, path);
            }
            i = semi;
        }
        return out;
    }

    Element element(const std::string& parent_path)
    {
        Element el;
        el.offset = pos_;
        ++pos_;  // '<'
        el.qname = std::string(name());
        el.name = std::string(local(el.qname));
        el.path = parent_path + "/" + el.name;
        while (true) {
            skip_ws();
            if (pos_ >= d_.size())
                fail("unterminated start tag", pos_, el.path);
            if (starts("/>")) {
                pos_ += 2;
                return el;
            }
            if (d_[pos_] == '>') {
                ++pos_;
                break;
            }
            std::size_t at = pos_;
            auto an = name();
            skip_ws();
            if (pos_ >= d_.size() || d_[pos_] != '=')
                fail("expected '='", pos_, el.path);
            ++pos_;
            skip_ws();
            if (pos_ >= d_.size() || (d_[pos_] != '"' && d_[pos_] != '\''))
                fail("expected quoted attribute value", pos_, el.path);
            char q = d_[pos_++];
            auto end = d_.find(q, pos_);
            if (end == std::string_view::npos)
                fail("unterminated attribute value", pos_, el.path);
            auto key = std::string(local(an));
            if (an.substr(0, 5) == "xmlns")
                key = std::string(an);
            if (el.attrs.count(key))
                fail("duplicate attribute", at, el.path);
            el.attrs[key] = decode(d_.substr(pos_, end - pos_), pos_, el.path);
            pos_ = end + 1;
        }
        std::string text;
        while (true) {
            if (pos_ >= d_.size())
                fail("unterminated element <" + el.qname + ">", el.offset, el.path);
            if (starts("</")) {
                std::size_t at = pos_;
                pos_ += 2;
                auto closing = name();
                if (closing != el.qname)
                    fail("mismatched end tag </" + std::string(closing) + ">", at, el.path);
                skip_ws();
                if (pos_ >= d_.size() || d_[pos_] != '>')
                    fail("expected '>'", pos_, el.path);
                ++pos_;
                break;
            }
            if (starts("<!--")) {
                skip_comment();
            } else if (starts("<?")) {
                auto e = d_.find("?>", pos_);
                if (e == std::string_view::npos)
                    fail("unterminated processing instruction", pos_, el.path);
                pos_ = e + 2;
            } else if (starts("<!")) {
                fail("unsupported markup", pos_, el.path);
            } else if (d_[pos_] == '<') {
                el.children.push_back(element(el.path));
            } else {
                auto next = d_.find('<', pos_);
                if (next == std::string_view::npos)
                    next = d_.size();
                text += decode(d_.substr(pos_, next - pos_), pos_, el.path);
                pos_ = next;
            }
        }
        el.text = std::string(trim(text));
        return el;
    }

    std::string_view d_;
    std::size_t pos_ = 0;
};

}  // namespace

const Element* Element::child(std::string_view n) const
{
    for (auto& c : children)
        if (c.name == n)
            return &c;
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view n) const
{
    std::vector<const Element*> out;
    for (auto& c : children)
        if (c.name == n)
            out.push_back(&c);
    return out;
}

std::string Element::attr(std::string_view n) const
{
    auto it = attrs.find(std::string(n));
    return it == attrs.end() ? std::string() : it->second;
}

Element parse(std::string_view doc)
{
    return Parser(doc).document();
}

std::string escape(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace srv6kit::transport::xml
