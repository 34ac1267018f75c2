#pragma once

#include "adi/array.hpp"
#include "adi/rng.hpp"

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace adi {

// Named parameter store. Insertion order is preserved and defines the
// checkpoint manifest order, so runs are byte-reproducible.
class ParamSet {
public:
    Array& add(const std::string& name, Array value, bool trainable = true) {
        if (index_.count(name)) throw std::invalid_argument("ParamSet: duplicate parameter " + name);
        index_[name] = names_.size();
        names_.push_back(name);
        values_.push_back(std::move(value));
        trainable_.push_back(trainable);
        return values_.back();
    }

    Array& add_randn(const std::string& name, const Shape& shape, double std_dev, Rng& rng,
                     bool trainable = true) {
        Array a(shape);
        for (double& v : a.data) v = rng.gauss() * std_dev;
        return add(name, std::move(a), trainable);
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    const Array& at(const std::string& name) const { return values_[idx(name)]; }
    Array& at(const std::string& name) { return values_[idx(name)]; }

    bool trainable(const std::string& name) const { return trainable_[idx(name)]; }
    void set_trainable(const std::string& name, bool t) { trainable_[idx(name)] = t; }
    void freeze_all() { std::fill(trainable_.begin(), trainable_.end(), false); }

    size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const Array& value(size_t i) const { return values_[i]; }
    Array& value(size_t i) { return values_[i]; }
    const std::string& name(size_t i) const { return names_[i]; }
    bool trainable(size_t i) const { return trainable_[i]; }

    std::vector<std::string> trainable_names() const {
        std::vector<std::string> out;
        for (size_t i = 0; i < names_.size(); ++i)
            if (trainable_[i]) out.push_back(names_[i]);
        return out;
    }

    int64_t total_elements() const {
        int64_t n = 0;
        for (const auto& v : values_) n += v.numel();
        return n;
    }

private:
    size_t idx(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::out_of_range("ParamSet: no parameter named " + name);
        return it->second;
    }

    std::vector<std::string> names_;
    std::vector<Array> values_;
    std::vector<char> trainable_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace adi
