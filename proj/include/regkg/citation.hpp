#pragma once
// Hierarchical regulatory citations (title > chapter > subchapter > part >
// subpart > section) and the text forms they are written in.

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regkg {

struct SectionRef {
    std::optional<int> title;
    std::optional<std::string> chapter;     // roman numeral, e.g. "I"
    std::optional<std::string> subchapter;  // letter, e.g. "B"
    std::optional<int> part;
    std::optional<std::string> subpart;     // letter, e.g. "E"
    std::optional<std::string> section;     // "117.257"

    bool empty() const {
        return !title && !chapter && !subchapter && !part && !subpart && !section;
    }
    auto operator<=>(const SectionRef&) const = default;
};

enum class Granularity { title = 1, chapter, subchapter, part, subpart, section };

// Granularity of the most specific populated field. Requires !ref.empty().
Granularity granularity(const SectionRef& ref);

// At least one field populated, and a section number's part prefix agrees
// with the part field.
bool is_valid(const SectionRef& ref);

// Recognizes a whole string as one citation:
//   "§ 117.264", "Sec. 117.264", "21 CFR 117.264", "21 CFR part 117",
//   "Part 117", "Subpart E of Part 117", "Part 117 Subpart E",
//   "Chapter I", "Subchapter B", "Title 21 Chapter I", ...
// For "§§" lists the first entry is returned; see parse_citation_list.
std::optional<SectionRef> parse_citation(std::string_view text);

// All refs named by a citation string, in written order ("§§ 117.257,
// 117.260 and 117.264" yields three). Empty on no match.
std::vector<SectionRef> parse_citation_list(std::string_view text);

// Citation text such that parse_citation(render_citation(r)) == r for every
// r the parser produces.
std::string render_citation(const SectionRef& ref);

// Stable id: "117.257" for sections, "Part117/SubpartE", "Part117",
// "ChapterI/SubchapterB", "ChapterI", "Title21" for hierarchy units.
std::string section_id(const SectionRef& ref);

// Graph entity name, already in canonical entity form:
// "§117.257", "PART 117 SUBPART E", "CHAPTER I", ...
std::string entity_label(const SectionRef& ref);

}  // namespace regkg
