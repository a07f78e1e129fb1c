#pragma once

#include <filesystem>
#include <string>
#include <type_traits>

namespace nldiff::output {

// 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string number(double x);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& file, const std::string& content);

class CsvWriter {
public:
    explicit CsvWriter(std::string header) : text_(std::move(header) + "\n") {}
    template <class... T>
    void row(const T&... cells) {
        bool first = true;
        ((text_ += (first ? "" : ","), text_ += cell(cells), first = false), ...);
        text_ += "\n";
    }
    const std::string& text() const { return text_; }

private:
    static std::string cell(double x) { return number(x); }
    static std::string cell(const std::string& s) { return s; }
    template <class I>
        requires std::is_integral_v<I>
    static std::string cell(I i) {
        return std::to_string(i);
    }
    std::string text_;
};

}
