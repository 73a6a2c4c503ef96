import logging
import math
import os
from pathlib import Path
from typing import List, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

import sirl_swarm.settings as s

LOG_LEVEL = logging.WARN
# LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG

POLICY_HEAD = "policy"
VALUE_HEAD = "value"

NUM_ACTIONS = 5
DTYPE = torch.float64

# One tensor per network parameter, in the order of net.parameters()
GradSet = List[torch.Tensor]


class Mlp(nn.Module):
    r"""
    Feed-forward network with tanh hidden units.

    The policy head ends in a softmax over the five actions, the value head is a single
    identity output. All parameters are float64; the topology is fixed at construction.
    """

    def __init__(self, topology: Sequence[int], head: str, seed=None):
        r"""
        Parameters
        ----------
        topology : sequence of int
            Layer sizes, input first and output last (5 for policy, 1 for value)
        head : string
            POLICY_HEAD or VALUE_HEAD
        seed : int
            Seed of the uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] initialization
        """
        super(Mlp, self).__init__()
        topology = tuple(int(n) for n in topology)
        if len(topology) < 2 or min(topology) < 1:
            raise ValueError("Invalid topology: {}".format(topology))
        if head == POLICY_HEAD and topology[-1] != NUM_ACTIONS:
            raise ValueError("A policy network needs {} outputs: {}".format(NUM_ACTIONS, topology))
        if head == VALUE_HEAD and topology[-1] != 1:
            raise ValueError("A value network needs one output: {}".format(topology))
        if head not in (POLICY_HEAD, VALUE_HEAD):
            raise ValueError("Unknown head: {}".format(head))

        self._topology = topology
        self._head = head
        self._layers = nn.ModuleList(
            [nn.Linear(a, b, dtype=DTYPE) for a, b in zip(topology[:-1], topology[1:])]
        )
        self.reset_parameters(seed)
        self.requires_grad_(True)

    def _log(self):
        # Setup a custom logger
        return s.get_custom_logger(self.__class__.__name__, LOG_LEVEL)

    @property
    def topology(self):
        return self._topology

    @property
    def head(self):
        return self._head

    @property
    def input_width(self):
        return self._topology[0]

    def reset_parameters(self, seed=None):
        generator = torch.Generator()
        generator.manual_seed(0 if seed is None else int(seed))
        with torch.no_grad():
            for layer in self._layers:
                bound = 1.0 / math.sqrt(layer.in_features)
                layer.weight.uniform_(-bound, bound, generator=generator)
                layer.bias.uniform_(-bound, bound, generator=generator)
        return self

    def zero_(self):
        with torch.no_grad():
            for p in self.parameters():
                p.zero_()
        return self

    def same_topology(self, other):
        return self._topology == other.topology and self._head == other.head

    def forward(self, x):
        for layer in self._layers[:-1]:
            x = torch.tanh(layer(x))
        return self._layers[-1](x)

    def flat_parameters(self):
        with torch.no_grad():
            return torch.cat([p.reshape(-1) for p in self.parameters()]).clone()

    def load_flat_parameters(self, flat):
        flat = torch.as_tensor(flat, dtype=DTYPE)
        expected = sum(p.numel() for p in self.parameters())
        if flat.numel() != expected:
            raise ValueError(
                "Parameter count mismatch: got {} for topology {} ({})".format(
                    flat.numel(), self._topology, expected
                )
            )
        offset = 0
        with torch.no_grad():
            for p in self.parameters():
                n = p.numel()
                p.copy_(flat[offset : offset + n].reshape(p.shape))
                offset += n
        return self


def _as_input(net: Mlp, state):
    x = torch.as_tensor(np.asarray(state, dtype=np.float64), dtype=DTYPE)
    if x.ndim != 1 or x.shape[0] != net.input_width:
        raise ValueError(
            "Input of width {} expected, got shape {}".format(net.input_width, tuple(x.shape))
        )
    if not torch.isfinite(x).all():
        raise ValueError("Non-finite network input: {}".format(x.tolist()))
    return x


def _check_head(net: Mlp, head):
    if net.head != head:
        raise ValueError("A {} network is required, got {}".format(head, net.head))


def policy_forward(net: Mlp, state):
    r"""
    Action distribution pi(.|s) as a numpy array of 5 probabilities
    """
    _check_head(net, POLICY_HEAD)
    x = _as_input(net, state)
    with torch.no_grad():
        probs = F.softmax(net(x), dim=-1)
    return probs.numpy().copy()


def value_forward(net: Mlp, state):
    r"""
    State value V(s) as a float
    """
    _check_head(net, VALUE_HEAD)
    x = _as_input(net, state)
    with torch.no_grad():
        return float(net(x)[0])


def value_loss_grad(net: Mlp, state, target_return):
    r"""
    Loss 0.5 * (R - V(s))^2 and its exact gradient

    Returns
    -------
    loss : float
    grads : GradSet
    """
    _check_head(net, VALUE_HEAD)
    if not math.isfinite(target_return):
        raise ValueError("Non-finite target return: {}".format(target_return))
    x = _as_input(net, state)
    value = net(x)[0]
    loss = 0.5 * (target_return - value) ** 2
    grads = torch.autograd.grad(loss, list(net.parameters()))
    return float(loss.detach()), [g.detach() for g in grads]


def policy_loss_grad(net: Mlp, state, action, advantage):
    r"""
    Loss -log pi(a|s) * advantage and its exact gradient

    Raises
    ------
    FloatingPointError
        When pi(a|s) is exactly zero
    """
    _check_head(net, POLICY_HEAD)
    if not math.isfinite(advantage):
        raise ValueError("Non-finite advantage: {}".format(advantage))
    action = int(action)
    if not 0 <= action < NUM_ACTIONS:
        raise ValueError("Unknown action: {}".format(action))
    x = _as_input(net, state)
    log_probs = F.log_softmax(net(x), dim=-1)
    if not torch.isfinite(log_probs[action]) or float(log_probs[action].exp()) == 0.0:
        raise FloatingPointError("pi(a|s) is zero for action {}".format(action))
    loss = -log_probs[action] * advantage
    grads = torch.autograd.grad(loss, list(net.parameters()))
    return float(loss.detach()), [g.detach() for g in grads]


def sync_target(src: Mlp, dst: Mlp):
    r"""
    Copy the parameters of a network into its target network
    """
    if not src.same_topology(dst):
        raise ValueError(
            "Topology mismatch: {} {} vs {} {}".format(src.head, src.topology, dst.head, dst.topology)
        )
    with torch.no_grad():
        for p_dst, p_src in zip(dst.parameters(), src.parameters()):
            p_dst.copy_(p_src)


def network_state(net: Mlp):
    return {
        "format_version": s.CHECKPOINT_VERSION,
        "topology": list(net.topology),
        "head": net.head,
        "params": net.flat_parameters(),
    }


def network_from_state(state):
    if state.get("format_version") != s.CHECKPOINT_VERSION:
        raise ValueError("Unsupported checkpoint version: {}".format(state.get("format_version")))
    net = Mlp(state["topology"], state["head"])
    net.load_flat_parameters(state["params"])
    return net


def save_checkpoint(net: Mlp, path):
    r"""
    Save topology and flat parameters of one network
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(network_state(net), path)
    if not os.path.isfile(path):
        raise OSError("Cannot find the saved checkpoint: {}".format(path))


def load_checkpoint(path):
    if not os.path.exists(path):
        raise FileNotFoundError("Cannot load the checkpoint: {}".format(path))
    state = torch.load(path, map_location="cpu", weights_only=False)
    return network_from_state(state)
