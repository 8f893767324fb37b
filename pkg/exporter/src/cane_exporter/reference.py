"""PyTorch mirror of the caneshuffle architecture.

Training happens against this module; its state_dict names are the source
side of the name map. Layer attribute names are chosen so the state_dict
keys line up with container names after the BN suffix rewrite.
"""

from __future__ import annotations

import torch
from torch import nn

from caneshuffle.model import ModelConfig


class ConvBN(nn.Module):
    def __init__(self, cin, cout, kernel, stride=1, padding=0, groups=1, act=True):
        super().__init__()
        self.conv = nn.Conv2d(cin, cout, kernel, stride=stride, padding=padding,
                              groups=groups, bias=False)
        self.bn = nn.BatchNorm2d(cout)
        self.act = act

    def forward(self, x):
        x = self.bn(self.conv(x))
        return torch.relu(x) if self.act else x


def _shuffle(x, groups=2):
    n, c, h, w = x.shape
    return (x.view(n, groups, c // groups, h, w)
            .transpose(1, 2).reshape(n, c, h, w))


class ShuffleBlock(nn.Module):
    def __init__(self, cin, cout, downsample):
        super().__init__()
        self.downsample = downsample
        self.cin = cin
        branch_ch = cout // 2
        if downsample:
            self.branch1 = nn.ModuleDict({
                "dw": ConvBN(cin, cin, 3, stride=2, padding=1, groups=cin, act=False),
                "pw": ConvBN(cin, branch_ch, 1, act=True),
            })
            right_in = cin
        else:
            self.branch1 = None
            right_in = cin // 2
        stride = 2 if downsample else 1
        self.branch2 = nn.ModuleDict({
            "pw1": ConvBN(right_in, branch_ch, 1, act=True),
            "dw": ConvBN(branch_ch, branch_ch, 3, stride=stride, padding=1,
                         groups=branch_ch, act=False),
            "pw2": ConvBN(branch_ch, branch_ch, 1, act=True),
        })

    def forward(self, x):
        if self.downsample:
            left = self.branch1["pw"](self.branch1["dw"](x))
            right = x
        else:
            left, right = x[:, : self.cin // 2], x[:, self.cin // 2:]
        for key in ("pw1", "dw", "pw2"):
            right = self.branch2[key](right)
        return _shuffle(torch.cat([left, right], dim=1))


class Head(nn.Module):
    def __init__(self, channels, hidden, classes):
        super().__init__()
        self.fc1 = nn.Linear(channels, hidden)
        self.fc2 = nn.Linear(hidden, classes)

    def forward(self, x):
        return self.fc2(torch.relu(self.fc1(x)))


class CaneShuffleNet(nn.Module):
    """Same graph as caneshuffle.model.ModelGraph, in torch."""

    def __init__(self, config: ModelConfig | None = None):
        super().__init__()
        self.config = config or ModelConfig()
        cfg = self.config
        self.stem = ConvBN(3, cfg.stem_channels, 3, stride=2, padding=1, act=True)
        self.pool = nn.MaxPool2d(3, stride=2, padding=1)
        cin = cfg.stem_channels
        for si, (nblocks, cout) in enumerate(zip(cfg.stage_blocks, cfg.stage_channels)):
            blocks = {}
            for bi in range(nblocks):
                down = bi == 0
                blocks[f"block{bi}"] = ShuffleBlock(cin if down else cout, cout, down)
                cin = cout
            setattr(self, f"stage{si + 2}", nn.ModuleDict(blocks))
        self.conv5 = ConvBN(cin, cfg.final_conv_channels, 1, act=True)
        self.head = Head(cfg.final_conv_channels, cfg.head_hidden, cfg.num_classes)

    def forward(self, x):
        x = self.pool(self.stem(x))
        for si in range(len(self.config.stage_blocks)):
            stage = getattr(self, f"stage{si + 2}")
            for block in stage.values():
                x = block(x)
        x = self.conv5(x)
        x = x.mean(dim=(2, 3))
        return self.head(x)
