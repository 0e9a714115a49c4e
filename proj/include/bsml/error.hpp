#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bsml {

// Base of all library errors. exit_code() maps onto the CLI contract.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 2; }
};

class XmlError : public Error {
public:
    XmlError(const std::string& msg, std::size_t line, std::size_t col)
        : Error("xml: line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    std::size_t line, col;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class UnitError : public Error {
public:
    using Error::Error;
};

class ValueError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 1; }
};

class CodeBlocksRewrite : public Error {
public:
    CodeBlocksRewrite(std::string nonterminal, std::string reason)
        : Error("code blocks prevent rewriting of " + nonterminal + ": " + reason),
          nonterminal(std::move(nonterminal)), reason(std::move(reason)) {}
    std::string nonterminal, reason;
};

class LL1Conflict : public Error {
public:
    LL1Conflict(std::string nonterminal, std::string terminal, std::vector<int> productions)
        : Error("LL(1) conflict at (" + nonterminal + ", " + terminal + ")"),
          nonterminal(std::move(nonterminal)), terminal(std::move(terminal)),
          productions(std::move(productions)) {}
    std::string nonterminal, terminal;
    std::vector<int> productions;
};

class ExprError : public Error {
public:
    using Error::Error;
};

class NoProof : public Error {
public:
    explicit NoProof(const std::string& msg) : Error("no proof: " + msg) {}
    int exit_code() const override { return 1; }
};

class Ambiguous : public Error {
public:
    Ambiguous(const std::string& required, const std::vector<std::string>& candidates)
        : Error(describe(required, candidates)), required(required), candidates(candidates) {}
    int exit_code() const override { return 1; }
    std::string required;
    std::vector<std::string> candidates;

private:
    static std::string describe(const std::string& r, const std::vector<std::string>& c) {
        std::string s = "ambiguous conversion of " + r + ", candidates:";
        for (auto& x : c) s += " " + x;
        return s;
    }
};

class DelayImpossible : public Error {
public:
    explicit DelayImpossible(const std::string& msg) : Error("delay impossible: " + msg) {}
    int exit_code() const override { return 1; }
};

}  // namespace bsml
