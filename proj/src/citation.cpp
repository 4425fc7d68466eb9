#include "regkg/citation.hpp"

#include <regex>

#include "regkg/common.hpp"

namespace regkg {

namespace {

const std::regex& section_list_re() {
    static const std::regex re(
        R"(^(?:§(?:§)?|[Ss]ec(?:tion)?s?\.?|SEC(?:TION)?S?\.?)\s*(\d+\.\d+[a-z]?)((?:\s*(?:,|,?\s*and|,?\s*or|through)\s*\d+\.\d+[a-z]?)*)$)");
    return re;
}

const std::regex& list_item_re() {
    static const std::regex re(R"(\d+\.\d+[a-z]?)");
    return re;
}

const std::regex& cfr_re() {
    static const std::regex re(R"(^(\d+)\s+CFR\s+(?:(?:[Pp]art|PART)\s+)?(\d+)(?:\.(\d+[a-z]?))?$)");
    return re;
}

const std::regex& subpart_of_part_re() {
    static const std::regex re(
        R"(^(?:[Ss]ubpart|SUBPART)\s+([A-Z]{1,2})\s+of\s+(?:this\s+)?(?:[Pp]art|PART)\s+(\d+)$)");
    return re;
}

const std::regex& path_re() {
    static const std::regex re(
        R"(^(?:(?:[Tt]itle|TITLE)\s+(\d+))?[,\s]*(?:(?:[Cc]hapter|CHAPTER)\s+([IVXLCDM]+))?[,\s]*(?:(?:[Ss]ubchapter|SUBCHAPTER)\s+([A-Z]{1,2}))?[,\s]*(?:(?:[Pp]art|PART)\s+(\d+))?[,\s]*(?:(?:[Ss]ubpart|SUBPART)\s+([A-Z]{1,2}))?$)");
    return re;
}

std::optional<int> to_int(const std::string& s) {
    if (s.empty() || s.size() > 9) return std::nullopt;
    return std::stoi(s);
}

SectionRef section_ref_from_number(const std::string& number) {
    SectionRef r;
    r.section = number;
    r.part = to_int(number.substr(0, number.find('.')));
    return r;
}

std::string clean(std::string_view text) {
    std::string s = normalize_whitespace(text);
    for (char& c : s)
        if (c == '\n') c = ' ';
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' || s.back() == ':'))
        s.pop_back();
    return trim(s);
}

}  // namespace

Granularity granularity(const SectionRef& r) {
    if (r.section) return Granularity::section;
    if (r.subpart) return Granularity::subpart;
    if (r.part) return Granularity::part;
    if (r.subchapter) return Granularity::subchapter;
    if (r.chapter) return Granularity::chapter;
    return Granularity::title;
}

bool is_valid(const SectionRef& r) {
    if (r.empty()) return false;
    if (r.section) {
        auto dot = r.section->find('.');
        if (dot == std::string::npos || dot == 0) return false;
        if (r.part && std::to_string(*r.part) != r.section->substr(0, dot)) return false;
    }
    return true;
}

std::vector<SectionRef> parse_citation_list(std::string_view text) {
    const std::string s = clean(text);
    std::smatch m;
    if (std::regex_match(s, m, section_list_re())) {
        std::vector<SectionRef> out;
        out.push_back(section_ref_from_number(m[1].str()));
        const std::string tail = m[2].str();
        for (auto it = std::sregex_iterator(tail.begin(), tail.end(), list_item_re());
             it != std::sregex_iterator(); ++it) {
            out.push_back(section_ref_from_number(it->str()));
        }
        return out;
    }
    if (std::regex_match(s, m, cfr_re())) {
        SectionRef r;
        r.title = to_int(m[1].str());
        if (m[3].matched) {
            r = section_ref_from_number(m[2].str() + "." + m[3].str());
            r.title = to_int(m[1].str());
        } else {
            r.part = to_int(m[2].str());
        }
        return {r};
    }
    if (std::regex_match(s, m, subpart_of_part_re())) {
        SectionRef r;
        r.subpart = m[1].str();
        r.part = to_int(m[2].str());
        return {r};
    }
    if (!s.empty() && std::regex_match(s, m, path_re())) {
        SectionRef r;
        if (m[1].matched) r.title = to_int(m[1].str());
        if (m[2].matched) r.chapter = m[2].str();
        if (m[3].matched) r.subchapter = m[3].str();
        if (m[4].matched) r.part = to_int(m[4].str());
        if (m[5].matched) r.subpart = m[5].str();
        if (!r.empty()) return {r};
    }
    return {};
}

std::optional<SectionRef> parse_citation(std::string_view text) {
    auto refs = parse_citation_list(text);
    if (refs.empty()) return std::nullopt;
    return refs.front();
}

std::string render_citation(const SectionRef& r) {
    if (r.section) {
        if (r.title) return std::to_string(*r.title) + " CFR " + *r.section;
        return "§ " + *r.section;
    }
    std::vector<std::string> parts;
    if (r.title) parts.push_back("Title " + std::to_string(*r.title));
    if (r.chapter) parts.push_back("Chapter " + *r.chapter);
    if (r.subchapter) parts.push_back("Subchapter " + *r.subchapter);
    if (r.part) parts.push_back("Part " + std::to_string(*r.part));
    if (r.subpart) parts.push_back("Subpart " + *r.subpart);
    return join(parts, " ");
}

std::string section_id(const SectionRef& r) {
    switch (granularity(r)) {
        case Granularity::section:
            return *r.section;
        case Granularity::subpart:
            return r.part ? "Part" + std::to_string(*r.part) + "/Subpart" + *r.subpart
                          : "Subpart" + *r.subpart;
        case Granularity::part:
            return "Part" + std::to_string(*r.part);
        case Granularity::subchapter:
            return r.chapter ? "Chapter" + *r.chapter + "/Subchapter" + *r.subchapter
                             : "Subchapter" + *r.subchapter;
        case Granularity::chapter:
            return "Chapter" + *r.chapter;
        case Granularity::title:
            return "Title" + std::to_string(*r.title);
    }
    return {};
}

std::string entity_label(const SectionRef& r) {
    switch (granularity(r)) {
        case Granularity::section:
            return "§" + *r.section;
        case Granularity::subpart:
            return r.part ? "PART " + std::to_string(*r.part) + " SUBPART " + *r.subpart
                          : "SUBPART " + *r.subpart;
        case Granularity::part:
            return "PART " + std::to_string(*r.part);
        case Granularity::subchapter:
            return r.chapter ? "CHAPTER " + *r.chapter + " SUBCHAPTER " + *r.subchapter
                             : "SUBCHAPTER " + *r.subchapter;
        case Granularity::chapter:
            return "CHAPTER " + *r.chapter;
        case Granularity::title:
            return "TITLE " + std::to_string(*r.title);
    }
    return {};
}

}  // namespace regkg
