# -*- coding: utf-8 -*-
#
# alfalab documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.
import sphinx_rtd_theme

# -- General configuration -----------------------------------------------------

extensions = []

# Add any paths that contain templates here, relative to this directory.
templates_path = ['_templates']

# The suffix of source filenames.
source_suffix = '.rst'

# The master toctree document.
master_doc = 'index'

# General information about the project.
project = u'alfalab'
copyright = u'2024, alfalab developers'

# The short X.Y version.
version = '0.1.0'
# The full version, including alpha/beta/rc tags.
release = '0.1.0'

exclude_trees = []

# The name of the Pygments (syntax highlighting) style to use.
pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]

html_static_path = ['_static']

# Output file base name for HTML help builder.
htmlhelp_basename = 'alfalabdoc'

# -- Options for LaTeX output --------------------------------------------------

latex_documents = [
    ('index', 'alfalab.tex', u'alfalab Documentation',
     u'alfalab developers', 'manual'),
]
