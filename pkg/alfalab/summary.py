# -*- coding: utf-8 -*-
""" Verdict summary over many fit reports, grouped by a label. """
import os
from dataclasses import dataclass

from scipy.stats import binom
from texttable import Texttable

from alfalab.stats import FitReport
from alfalab.stats import REJECT
from alfalab.util import AlfaException
from alfalab.util import alfalab_logger
from alfalab.util import load_json

TOTAL = 'total'


@dataclass
class GroupSummary(object):
    label: str
    instances: int = 0
    chi2_tested: int = 0
    chi2_rejections: int = 0
    bootstrap_tested: int = 0
    bootstrap_rejections: int = 0
    p_value_gaps: int = 0
    alpha: float = 0.05

    def add(self, report):
        self.instances += 1
        if report.gof is not None:
            self.chi2_tested += 1
            if report.gof.p_value < self.alpha:
                self.chi2_rejections += 1
        if report.bootstrap is not None:
            self.bootstrap_tested += 1
            if report.bootstrap.verdict == REJECT:
                self.bootstrap_rejections += 1
        if report.p_value_gap:
            self.p_value_gaps += 1

    @property
    def chi2_tail(self):
        return type1_tail(self.chi2_rejections, self.chi2_tested, self.alpha)

    @property
    def bootstrap_tail(self):
        return type1_tail(self.bootstrap_rejections, self.bootstrap_tested, self.alpha)

    @property
    def excess_rejections(self):
        """ More rejections than type 1 errors at level alpha plausibly explain. """
        return self.chi2_tail < self.alpha or self.bootstrap_tail < self.alpha


def type1_tail(rejections, tested, alpha):
    """ P(at least ``rejections`` rejections) when all ``tested`` null hypotheses are true. """
    if rejections <= 0:
        return 1.0
    return float(binom.sf(rejections - 1, tested, alpha))


def report_paths(paths):
    """ Expands directories into the fit.json files below them. """
    found = []
    for path in paths:
        if os.path.isdir(path):
            for root, dirs, files in os.walk(path):
                dirs.sort()
                found.extend(os.path.join(root, f) for f in sorted(files) if f == 'fit.json')
        else:
            found.append(path)
    return found


def load_reports(paths):
    reports = []
    for path in report_paths(paths):
        try:
            reports.append(FitReport.from_dict(load_json(path)))
        except (KeyError, TypeError, ValueError) as e:
            raise AlfaException('Error loading file %s: %s' % (path, e)) from e
    alfalab_logger.info('Loaded %d fit reports' % (len(reports)))
    return reports


def summarize(reports, group_by='instance_type', alpha=0.05):
    """ Returns one GroupSummary per value of labels[group_by], sorted by label, and the total last. """
    groups = {}
    total = GroupSummary(TOTAL, alpha=alpha)
    for report in reports:
        label = str(report.labels.get(group_by, 'unlabeled'))
        groups.setdefault(label, GroupSummary(label, alpha=alpha)).add(report)
        total.add(report)
    return [groups[label] for label in sorted(groups)] + [total]


def render_summary(groups, max_width=120):
    text_table = Texttable(max_width=max_width)
    text_table.header(['group', 'instances', 'chi2 rejected', 'bootstrap rejected', 'P(chi2 type 1)',
                       'P(bootstrap type 1)', 'p-value gaps', 'excess'])
    text_table.set_cols_dtype(['t', 'i', 't', 't', 'f', 'f', 'i', 't'])
    text_table.set_precision(4)
    for group in groups:
        text_table.add_row([group.label, group.instances,
                            '%d/%d' % (group.chi2_rejections, group.chi2_tested),
                            '%d/%d' % (group.bootstrap_rejections, group.bootstrap_tested),
                            group.chi2_tail, group.bootstrap_tail, group.p_value_gaps,
                            'yes' if group.excess_rejections else 'no'])
    return text_table.draw()
