import yaml
def yaml_load(filename):
    '''
    Use the filename variable to open a file, load the contents into a variable, 
    and return it
    '''
