#pragma once

#include <map>
#include <string>

#include "tensor.hpp"

namespace osr {

// Flat registry of named weights with gradient slots. std::map keeps names
// sorted, which fixes the checkpoint array order and every reduction order.
template <class T>
struct ParamStoreT {
    struct Entry {
        TensorT<T> value;
        TensorT<T> grad;
        bool trainable = true;
    };

    std::map<std::string, Entry> entries;

    bool has(const std::string& name) const { return entries.count(name) != 0; }

    Entry& add(const std::string& name, TensorT<T> value, bool trainable = true) {
        require(!has(name), errc::invalid_argument, "duplicate param name: " + name);
        Entry e;
        e.grad = TensorT<T>(value.shape);
        e.value = std::move(value);
        e.trainable = trainable;
        return entries.emplace(name, std::move(e)).first->second;
    }

    Entry& at(const std::string& name) {
        auto it = entries.find(name);
        require(it != entries.end(), errc::invalid_state, "missing param: " + name);
        return it->second;
    }
    const Entry& at(const std::string& name) const {
        auto it = entries.find(name);
        require(it != entries.end(), errc::invalid_state, "missing param: " + name);
        return it->second;
    }

    const TensorT<T>& value(const std::string& name) const { return at(name).value; }

    void zero_grads() {
        for (auto& [name, e] : entries)
            std::fill(e.grad.v.begin(), e.grad.v.end(), T(0));
    }

    // mark every entry under `prefix` (non-)trainable
    void set_trainable(const std::string& prefix, bool trainable) {
        for (auto& [name, e] : entries)
            if (name.rfind(prefix, 0) == 0) e.trainable = trainable;
    }

    int64_t count_params(const std::string& prefix = "") const {
        int64_t n = 0;
        for (const auto& [name, e] : entries)
            if (prefix.empty() || name.rfind(prefix, 0) == 0) n += e.value.numel();
        return n;
    }

    template <class U>
    ParamStoreT<U> cast() const {
        ParamStoreT<U> out;
        for (const auto& [name, e] : entries) {
            auto& ne = out.entries[name];
            ne.value = e.value.template cast<U>();
            ne.grad = TensorT<U>(e.value.shape);
            ne.trainable = e.trainable;
        }
        return out;
    }
};

using ParamStore = ParamStoreT<float>;

}  // namespace osr
