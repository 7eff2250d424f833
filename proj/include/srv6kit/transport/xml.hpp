#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

// Just enough XML for NETCONF messages: elements, attributes, character
// data, the five predefined entities and numeric character references.
// Comments, processing instructions and the XML declaration are skipped.
// No DTDs, no CDATA.
namespace srv6kit::transport::xml {

struct Element {
    std::string name;        // local name, namespace prefix stripped
    std::string qname;       // name as written
    std::map<std::string, std::string> attrs;
    std::vector<Element> children;
    std::string text;        // concatenated character data, trimmed
    std::size_t offset = 0;  // byte offset of '<'
    std::string path;        // e.g. /rpc/edit-config/config

    const Element* child(std::string_view name) const;
    std::vector<const Element*> children_named(std::string_view name) const;
    std::string attr(std::string_view name) const;
};

/// Throws Error(MalformedMessage) with byte offset.
Element parse(std::string_view doc);

std::string escape(std::string_view text);

}  // namespace srv6kit::transport::xml
