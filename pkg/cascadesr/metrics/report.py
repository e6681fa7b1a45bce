"""
Benchmark reports: `# key: value` metadata lines, then
image,method,scale,noise_variance,psnr_db,ssim
"""
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Dict, List

COLUMNS = ['image', 'method', 'scale', 'noise_variance', 'psnr_db', 'ssim']

MetricRow = namedtuple('MetricRow', COLUMNS)


def format_psnr(value):
    return 'inf' if math.isinf(value) else f'{value:.6f}'


@dataclass
class MetricsReport:
    metadata: Dict[str, str] = field(default_factory=dict)
    rows: List[MetricRow] = field(default_factory=list)

    def add(self, image, method, scale, noise_variance, psnr_db, ssim):
        self.rows.append(MetricRow(image, method, int(scale), float(noise_variance),
                                   float(psnr_db), float(ssim)))

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: (r.image, r.method, r.noise_variance))

    def lines(self):
        out = [f'# {k}: {v}' for k, v in self.metadata.items()]
        out.append(','.join(COLUMNS))
        for r in self.sorted_rows():
            out.append(f'{r.image},{r.method},{r.scale},{r.noise_variance:g},'
                       f'{format_psnr(r.psnr_db)},{r.ssim:.6f}')
        return out

    def to_csv(self, path):
        with open(path, 'w', newline='') as wt:
            wt.write('\n'.join(self.lines()) + '\n')
        return path

    def summary(self):
        """Mean psnr/ssim per (method, noise_variance)."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r.method, r.noise_variance), []).append(r)
        return {
            k: (sum(r.psnr_db for r in v) / len(v), sum(r.ssim for r in v) / len(v))
            for k, v in sorted(groups.items())
        }
