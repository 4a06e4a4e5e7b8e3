# Copyright 2026 The pipesynth Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Independent torch re-implementation of the policy/value network.

Reads a case written by network_case_dump and checks the loss, the
gradient (autograd) and the SGD loss trajectory against the library.
Prints the oracle trajectory endpoints; exits 1 on disagreement.
"""

import json
import subprocess
import sys

import torch

torch.set_default_dtype(torch.float64)


def unpack(flat, groups):
    out = {}
    for g in groups:
        size = g["rows"] * g["cols"]
        t = flat[g["offset"]:g["offset"] + size]
        out[g["name"]] = t.view(g["rows"], g["cols"]) if g["cols"] > 1 else t.view(g["rows"])
    return out


def loss_fn(flat, case):
    p = unpack(flat, case["groups"])
    total = 0.0
    for ex in case["batch"]:
        meta = torch.tensor(ex["meta"])
        h = torch.tanh(p["meta_weight"] @ meta + p["meta_bias"])
        for tok in ex["tokens"]:
            if tok == 0:
                break
            x = p["embedding"][tok]
            z = torch.sigmoid(p["input_z"] @ x + p["recurrent_z"] @ h + p["bias_z"])
            r = torch.sigmoid(p["input_r"] @ x + p["recurrent_r"] @ h + p["bias_r"])
            n = torch.tanh(p["input_n"] @ x + p["recurrent_n"] @ (r * h) + p["bias_n"])
            h = (1 - z) * n + z * h
        logits = p["policy_weight"] @ h + p["policy_bias"]
        legal = torch.tensor(ex["legal"], dtype=torch.bool)
        masked = torch.where(legal, logits, torch.tensor(-float("inf")))
        logp = torch.log_softmax(masked, dim=0)
        pi = torch.tensor(ex["pi"])
        ce = -(pi[pi > 0] * torch.clamp(logp[pi > 0], min=torch.log(torch.tensor(1e-12)))).sum()
        v = torch.sigmoid(p["value_weight"] @ h + p["value_bias"].reshape(()))
        total = total + ce + (v - ex["e"]) ** 2
    return total / len(case["batch"]) + case["alpha"] * (flat ** 2).sum()


def check_case(case):
    flat = torch.tensor(case["params"], requires_grad=True)
    loss = loss_fn(flat, case)
    (grad,) = torch.autograd.grad(loss, flat)
    ok = True
    if abs(loss.item() - case["loss"]) > 1e-10 * max(1.0, abs(loss.item())):
        print("loss mismatch", loss.item(), case["loss"])
        ok = False
    lib = torch.tensor(case["gradient"])
    err = ((grad - lib).abs() / torch.clamp(grad.abs() + lib.abs(), min=1e-8)).max().item()
    if err > 1e-8:
        print("gradient mismatch, max relative error", err)
        ok = False
    theta = flat.detach().clone()
    trajectory = [loss_fn(theta, case).item()]
    for _ in range(case["steps"]):
        theta.requires_grad_(True)
        (g,) = torch.autograd.grad(loss_fn(theta, case), theta)
        theta = (theta - case["lr"] * g).detach()
        trajectory.append(loss_fn(theta, case).item())
    lib_traj = case["trajectory"]
    drift = max(abs(a - b) for a, b in zip(trajectory, lib_traj))
    if drift > 1e-8:
        print("trajectory mismatch, max drift", drift)
        ok = False
    print("loss %.12f grad_rel_err %.2e initial %.6f final %.6f ratio %.4f"
          % (loss.item(), err, trajectory[0], trajectory[-1], trajectory[-1] / trajectory[0]))
    return ok


def main():
    # network_oracle.py CASE.json  |  network_oracle.py --dump EXE
    if len(sys.argv) > 2 and sys.argv[1] == "--dump":
        ok = True
        for args in (["3", "0.08", "0", "20", "0.5"], ["11", "1.0", "1", "50", "0.2"],
                     ["16", "1.0", "0", "30", "0.2"]):
            out = subprocess.run([sys.argv[2]] + args, check=True, capture_output=True, text=True)
            ok = check_case(json.loads(out.stdout)) and ok
        return 0 if ok else 1
    case = json.load(open(sys.argv[1]) if len(sys.argv) > 1 else sys.stdin)
    return 0 if check_case(case) else 1


if __name__ == "__main__":
    sys.exit(main())
