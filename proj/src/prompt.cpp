#include "hri/reasoning.hpp"

#include <fstream>
#include <regex>
#include <sstream>

namespace hri {

namespace {

std::string substitute(std::string text, const std::string& slot, const std::string& value)
{
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
    return text;
}

std::size_t occurrences(const std::string& hay, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size()))
        ++n;
    return n;
}

std::string strip(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

PromptTemplate parse_prompt_template(const std::string& text)
{
    static const std::regex header(R"(^=== part([1-6]) ===\s*$)");
    std::string parts[6];
    bool seen[6] = {};
    int current = -1;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::smatch m;
        if (std::regex_match(line, m, header)) {
            current = m[1].str()[0] - '1';
            if (seen[current])
                throw LoadError("prompt template: duplicate section part" + m[1].str());
            seen[current] = true;
            continue;
        }
        if (current < 0) {
            if (!strip(line).empty())
                throw LoadError("prompt template: text before the first section header");
            continue;
        }
        parts[current] += line + "\n";
    }
    for (int i = 0; i < 6; ++i) {
        parts[i] = strip(parts[i]);
        if (!seen[i])
            throw LoadError("prompt template: missing section part" + std::to_string(i + 1));
        if (i != 4 && parts[i].empty())
            throw LoadError("prompt template: section part" + std::to_string(i + 1) + " is empty");
    }
    PromptTemplate t{parts[0], parts[1], parts[2], parts[3], parts[4], parts[5]};
    if (occurrences(t.part3_task_cot, kCotSentence) != 1)
        throw LoadError(std::string("prompt template: part3 must contain \"") + kCotSentence + "\" exactly once");
    if (occurrences(t.part4_api_catalog, "{{part4}}") != 1)
        throw LoadError("prompt template: part4 must contain the {{part4}} slot exactly once");
    return t;
}

PromptTemplate load_prompt_template(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open prompt template '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_prompt_template(ss.str());
}

std::string render_catalog(const dsl::ApiCatalog& catalog)
{
    std::string out;
    for (const auto& sig : catalog.signatures()) {
        if (!out.empty())
            out += "\n";
        out += "- " + sig.render();
        if (!sig.doc.empty())
            out += " -- " + sig.doc;
    }
    return out;
}

std::string build_system_prompt(const PromptTemplate& tmpl, const dsl::ApiCatalog& catalog,
                                const std::string& scenario)
{
    if (catalog.empty())
        throw InvalidArgument("cannot build a prompt for an empty API catalog");
    const std::string catalog_text = render_catalog(catalog);
    const std::string* parts[] = {&tmpl.part1_setup,       &tmpl.part2_input_schema, &tmpl.part3_task_cot,
                                  &tmpl.part4_api_catalog, &tmpl.part5_examples,     &tmpl.part6_output_format};
    std::string out;
    for (const auto* p : parts) {
        if (p->empty())
            continue;
        std::string rendered = substitute(substitute(*p, "{{part4}}", catalog_text), "{{scenario}}", scenario);
        if (!out.empty())
            out += "\n\n";
        out += rendered;
    }
    return out;
}

std::string scenario_context(const ScenarioSpec& scenario)
{
    std::ostringstream out;
    out << "Scenario \"" << scenario.name << "\" in a " << scenario.corridor.width << " x "
        << scenario.corridor.length << " m corridor. Steps in order:";
    for (const auto& step : scenario.steps)
        out << "\n  " << step.id << ": " << step.instruction_text;
    return out.str();
}

} // namespace hri
